"""Fourier representation of functions on the unit torus.

Coefficients are stored in *natural* mode order ``k0, ..., floor(N/2)`` with
``k0 = -floor(N/2)`` for odd ``N`` and ``k0 = -N/2 + 1`` for even ``N``.  For
even ``N`` the unpaired mode is ``+N/2``.  The transform pair uses the
analysis normalisation ``a_k = int u(x) exp(-2 pi i k x) dx`` so Parseval
holds without factors: ``||u||_{L2}^2 = sum |a_k|^2``.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidResolution, ParseError, ShapeMismatch

TWO_PI = 2.0 * np.pi
MAGIC = b"SCGL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHI")


def lowest_mode(N: int) -> int:
    return -(N // 2) if N % 2 else -(N // 2) + 1


@lru_cache(maxsize=64)
def _modes(N: int) -> np.ndarray:
    m = np.arange(lowest_mode(N), N // 2 + 1)
    m.setflags(write=False)
    return m


def modes(N: int) -> np.ndarray:
    """Integer wavenumbers in natural order (read-only array)."""
    if N < 1:
        raise InvalidResolution(f"N must be positive (got {N})")
    return _modes(int(N))


def eigenvalues(N: int) -> np.ndarray:
    """lambda_k = (2 pi k)^2 for the retained modes."""
    return (TWO_PI * modes(N)) ** 2


def sub_slice(N_from: int, N_to: int) -> slice:
    """Slice selecting the N_to mode set inside a natural-order N_from array."""
    if N_to > N_from:
        raise InvalidResolution(f"cannot restrict N={N_from} to larger N={N_to}")
    start = lowest_mode(N_to) - lowest_mode(N_from)
    return slice(start, start + N_to)


@dataclass(frozen=True, eq=False)
class SpectralField:
    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.N,):
            raise ShapeMismatch(f"expected {self.N} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self) -> np.ndarray:
        return modes(self.N)

    @classmethod
    def zeros(cls, N: int) -> "SpectralField":
        return cls(N, np.zeros(N, dtype=np.complex128))

    @classmethod
    def single_mode(cls, N: int, k: int, amplitude: complex = 1.0) -> "SpectralField":
        c = np.zeros(N, dtype=np.complex128)
        c[k - lowest_mode(N)] = amplitude
        return cls(N, c)

    def mode(self, k: int) -> complex:
        return complex(self.coeffs[k - lowest_mode(self.N)])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return self.N == other.N and np.array_equal(self.coeffs, other.coeffs)


@dataclass(frozen=True, eq=False)
class GridField:
    N: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.N,):
            raise ShapeMismatch(f"expected {self.N} grid values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) / self.N


# -- raw array transforms (natural order <-> grid), used by the integrators --

def coeffs_to_grid(a: np.ndarray) -> np.ndarray:
    N = a.shape[-1]
    return np.fft.ifft(np.roll(a, lowest_mode(N), axis=-1), axis=-1) * N


def grid_to_coeffs(u: np.ndarray) -> np.ndarray:
    N = u.shape[-1]
    return np.roll(np.fft.fft(u, axis=-1), -lowest_mode(N), axis=-1) / N


def to_coeffs(g: GridField) -> SpectralField:
    return SpectralField(g.N, grid_to_coeffs(g.values))


def to_grid(f: SpectralField) -> GridField:
    return GridField(f.N, coeffs_to_grid(f.coeffs))


def pad_coeffs(a: np.ndarray, N_target: int) -> np.ndarray:
    """Zero-pad natural-order coefficients to a larger resolution."""
    out = np.zeros(a.shape[:-1] + (N_target,), dtype=np.complex128)
    out[..., sub_slice(N_target, a.shape[-1])] = a
    return out


def project(f: SpectralField, N_target: int) -> SpectralField:
    """Spectral Galerkin projection onto the N_target lowest modes."""
    if N_target < 1 or N_target > f.N:
        raise InvalidResolution(f"N_target={N_target} must be in [1, {f.N}]")
    return SpectralField(N_target, f.coeffs[sub_slice(f.N, N_target)].copy())


# -- semigroup e^{tA}, A = (1 + i nu) Laplacian --

def semigroup_multiplier(N: int, t: float, nu: float) -> np.ndarray:
    return np.exp(-(1.0 + 1j * nu) * eigenvalues(N) * t)


def integral_multiplier(N: int, t: float, nu: float) -> np.ndarray:
    """Multiplier of int_0^t e^{sA} ds; equals t on the zero mode."""
    c = (1.0 + 1j * nu) * eigenvalues(N)
    out = np.full(N, t, dtype=np.complex128)
    nz = c != 0
    out[nz] = -np.expm1(-c[nz] * t) / c[nz]
    return out


def semigroup_apply(f: SpectralField, t: float, params) -> SpectralField:
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    return SpectralField(f.N, f.coeffs * semigroup_multiplier(f.N, t, params.nu))


def semigroup_integral_apply(f: SpectralField, t: float, params) -> SpectralField:
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    return SpectralField(f.N, f.coeffs * integral_multiplier(f.N, t, params.nu))


# -- norms --

def norm_l2(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))


def norm_sobolev(f: SpectralField, alpha: float) -> float:
    """Homogeneous-space norm with weight (1 + lambda_k)^alpha."""
    w = (1.0 + eigenvalues(f.N)) ** alpha
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def norm_l4(g: GridField) -> float:
    return float(np.mean(np.abs(g.values) ** 4) ** 0.25)


def grid_norm_l2(g: GridField) -> float:
    return float(np.sqrt(np.mean(np.abs(g.values) ** 2)))


# -- serialisation --

def field_to_bytes(f: SpectralField) -> bytes:
    body = np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes()
    return _HEADER.pack(MAGIC, FORMAT_VERSION, f.N) + body


def field_from_bytes(data: bytes) -> SpectralField:
    if len(data) < _HEADER.size:
        raise ParseError("truncated field record header")
    magic, version, N = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported field format version {version}")
    expected = _HEADER.size + 16 * N
    if len(data) != expected:
        raise ParseError(f"field record has {len(data)} bytes, expected {expected}")
    return SpectralField(N, np.frombuffer(data, dtype="<c16", offset=_HEADER.size).astype(np.complex128))


def write_field(path, f: SpectralField) -> None:
    Path(path).write_bytes(field_to_bytes(f))


def read_field(path) -> SpectralField:
    return field_from_bytes(Path(path).read_bytes())


def field_to_csv(f: SpectralField) -> str:
    buf = io.StringIO()
    buf.write("k,re,im\n")
    for k, c in zip(f.modes, f.coeffs):
        buf.write(f"{int(k)},{float(c.real)!r},{float(c.imag)!r}\n")
    return buf.getvalue()
