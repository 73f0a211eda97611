"""Sampling of the stochastic inputs and their coupling across resolutions.

Random numbers come from numpy's Philox4x64 counter-based generator.  A
:class:`RngStream` is a value ``(seed, stream_id, counter)``: the 128-bit
Philox key is ``seed | stream_id << 64`` and ``counter`` occupies the top
64-bit word of the 256-bit Philox counter, so every (seed, stream, counter)
triple owns a disjoint block of 2**192 outputs.  Gaussians are drawn with
``Generator.standard_normal`` (numpy's ziggurat), real parts of all modes
first then imaginary parts, modes in natural order.

Per-mode values are always in natural mode order (see :mod:`scgle.spectral`).
The noise amplitude sigma is *not* applied here.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .config import NoiseSpec, qk_array
from .errors import ShapeMismatch
from .spectral import eigenvalues, modes, semigroup_multiplier, sub_slice

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "counter"):
            v = int(getattr(self, name))
            if not 0 <= v <= _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer (got {v})")

    def generator(self) -> np.random.Generator:
        key = int(self.seed) | (int(self.stream_id) << 64)
        return np.random.Generator(np.random.Philox(key=key, counter=int(self.counter) << 192))

    def at(self, counter: int) -> "RngStream":
        return replace(self, counter=counter)

    def split(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id, 0)


@dataclass(frozen=True, eq=False)
class ConvIncrement:
    """Exact samples of int_{t}^{t+dt} e^{(t+dt-s)A} dW_k(s), per mode."""

    N: int
    dt: float
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class BrownianIncrement:
    N: int
    dt: float
    values: np.ndarray


def variance_conv(k, dt: float, spec: NoiseSpec):
    """Per-component variance of the exact convolution increment of mode k."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0 (got {dt})")
    k_arr = np.atleast_1d(np.asarray(k))
    lam = (2.0 * np.pi * k_arr) ** 2
    q = qk_array(spec, k_arr)
    out = q * dt
    nz = lam > 0
    out[nz] = q[nz] * (-np.expm1(-2.0 * lam[nz] * dt)) / (2.0 * lam[nz])
    return float(out[0]) if np.ndim(k) == 0 else out


@lru_cache(maxsize=128)
def _conv_std(N: int, dt: float, spec: NoiseSpec) -> np.ndarray:
    s = np.sqrt(variance_conv(modes(N), dt, spec))
    s.setflags(write=False)
    return s


@lru_cache(maxsize=128)
def _brownian_std(N: int, dt: float, spec: NoiseSpec) -> np.ndarray:
    s = np.sqrt(qk_array(spec, modes(N)) * dt)
    s.setflags(write=False)
    return s


def _complex_normals(rng: RngStream, N: int) -> np.ndarray:
    x = rng.generator().standard_normal(2 * N)
    return x[:N] + 1j * x[N:]


def sample_conv_increment(rng: RngStream, N: int, dt: float, spec: NoiseSpec, params=None) -> ConvIncrement:
    """Draw one exact convolution increment; ``params`` is unused (the law does not depend on nu)."""
    return ConvIncrement(N, dt, _complex_normals(rng, N) * _conv_std(N, float(dt), spec))


def sample_brownian_increment(rng: RngStream, N: int, dt: float, spec: NoiseSpec) -> BrownianIncrement:
    return BrownianIncrement(N, dt, _complex_normals(rng, N) * _brownian_std(N, float(dt), spec))


def _check_fine(fine: Sequence, cls) -> None:
    if len(fine) != 4:
        raise ShapeMismatch(f"need exactly 4 fine increments, got {len(fine)}")
    N, dt = fine[0].N, fine[0].dt
    for inc in fine:
        if not isinstance(inc, cls):
            raise ShapeMismatch(f"expected {cls.__name__}, got {type(inc).__name__}")
        if inc.N != N or inc.dt != dt:
            raise ShapeMismatch("fine increments must share resolution and step")
    if N % 2:
        raise ShapeMismatch(f"fine resolution must be even (got {N})")


def couple_down(fine: Sequence[ConvIncrement], params) -> ConvIncrement:
    """Aggregate four consecutive (2N, dt/4) increments into one (N, dt) increment.

    Uses the semigroup identity: the coarse integral is the sum of the fine
    integrals, each propagated by e^{(3-j) dt/4 A} to the coarse step end.
    """
    _check_fine(fine, ConvIncrement)
    Nf, dtf = fine[0].N, fine[0].dt
    N = Nf // 2
    sl = sub_slice(Nf, N)
    step = semigroup_multiplier(N, dtf, params.nu)
    acc = fine[0].values[sl].copy()
    for inc in fine[1:]:
        # Horner form: ((I0 e + I1) e + I2) e + I3
        acc *= step
        acc += inc.values[sl]
    return ConvIncrement(N, 4 * dtf, acc)


def couple_down_brownian(fine: Sequence[BrownianIncrement]) -> BrownianIncrement:
    _check_fine(fine, BrownianIncrement)
    Nf, dtf = fine[0].N, fine[0].dt
    sl = sub_slice(Nf, Nf // 2)
    acc = fine[0].values[sl].copy()
    for inc in fine[1:]:
        acc += inc.values[sl]
    return BrownianIncrement(Nf // 2, 4 * dtf, acc)


class NoiseHierarchy:
    """Refinement-coupled increments on levels (N, dt), (2N, dt/4), ...

    Only the finest level is sampled; coarser levels are aggregated from it,
    so every level sees the same Brownian path.  Fine sub-step ``i`` of
    coarse step ``m`` uses Philox counter ``m * 4**(levels-1) + i``.
    """

    def __init__(self, N: int, dt: float, levels: int, spec: NoiseSpec, params, kind: str = "conv"):
        if levels < 1:
            raise ValueError("levels must be >= 1")
        if kind not in ("conv", "brownian"):
            raise ValueError(f"unknown increment kind {kind!r}")
        self.levels = [(N * 2**l, dt / 4**l) for l in range(levels)]
        self.spec = spec
        self.params = params
        self.kind = kind

    @property
    def fine_per_coarse(self) -> int:
        return 4 ** (len(self.levels) - 1)

    def sample_step(self, stream: RngStream, m: int) -> list[list]:
        """Increments for coarse step ``m``: one list per level, coarsest first."""
        Nf, dtf = self.levels[-1]
        n = self.fine_per_coarse
        if self.kind == "conv":
            finest = [sample_conv_increment(stream.at(m * n + i), Nf, dtf, self.spec) for i in range(n)]
        else:
            finest = [sample_brownian_increment(stream.at(m * n + i), Nf, dtf, self.spec) for i in range(n)]
        out = [finest]
        while len(out[0]) > 1:
            cur = out[0]
            if self.kind == "conv":
                out.insert(0, [couple_down(cur[i:i + 4], self.params) for i in range(0, len(cur), 4)])
            else:
                out.insert(0, [couple_down_brownian(cur[i:i + 4]) for i in range(0, len(cur), 4)])
        return out

    def sample_path(self, stream: RngStream, steps: int) -> list[list]:
        """Increments for ``steps`` coarse steps, flattened per level."""
        per_level: list[list] = [[] for _ in self.levels]
        for m in range(steps):
            for lvl, incs in enumerate(self.sample_step(stream, m)):
                per_level[lvl].extend(incs)
        return per_level


def analytic_coupled_variance(k, dt: float, spec: NoiseSpec):
    """Variance of the aggregated increment computed from the fine-level law.

    sum_j e^{-2 lambda (3-j) dt/4} v(dt/4); equals variance_conv(k, dt) exactly.
    """
    lam = (2.0 * np.pi * np.asarray(k, dtype=float)) ** 2
    v = variance_conv(k, dt / 4, spec)
    return sum(np.exp(-2.0 * lam * (3 - j) * dt / 4) * v for j in range(4))


def increments_to_csv_rows(level: int, step: int, inc) -> list[str]:
    return [
        f"{level},{step},{int(k)},{float(c.real)!r},{float(c.imag)!r}"
        for k, c in zip(modes(inc.N), inc.values)
    ]


__all__ = [
    "RngStream",
    "ConvIncrement",
    "BrownianIncrement",
    "NoiseHierarchy",
    "variance_conv",
    "sample_conv_increment",
    "sample_brownian_increment",
    "couple_down",
    "couple_down_brownian",
    "analytic_coupled_variance",
    "eigenvalues",
]
