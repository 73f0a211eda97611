"""Pointwise nonlinear kernels, with numba and pure-numpy implementations.

The backend is picked once at import time.  Set ``SCGLE_NUMBA=0`` to force
the numpy path (useful for debugging or when numba is unavailable); both
paths are always importable so tests and benchmarks can compare them.

With ``s = |z|^2``, ``x = 2 R dt`` and ``E = 1 - exp(-x)`` the flow map is

    Phi(z) = z * exp(a + i b),   a = -log(1 + q) / 2,   q = (s/R - 1) E,
                                  b = -mu/2 * log(1 + s (exp(x) - 1) / R).

``log(1 + q)`` goes through ``log1p`` where that is accurate and otherwise
through ``1 + q = (s/R) E + exp(-x)`` in log space, so tiny or huge ``|z|``
and large ``R dt`` neither overflow nor cancel.  The increment map
``(Phi(z) - z) / dt`` uses ``expm1`` of the complex exponent, and a
two-term Taylor series where ``dt (R + |1 + i mu| s)`` is negligible.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SCGLE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")
BACKEND = "numba" if USE_NUMBA else "numpy"

# the increment map uses its Taylor series where dt * (R + |1 + i mu| |z|^2) is below this
TAYLOR_SCALE = 1e-8
# 2*R*dt beyond which exp(2 R dt) is avoided
_BIG_EXPONENT = 700.0
# above this the magnitude is applied as exp(a + log|z|) to dodge overflow of exp(a)
_BIG_A = 700.0


# ---------------------------------------------------------------- numpy path

def _exponent_numpy(z, dt, R, mu):
    r = np.abs(z)
    x = 2.0 * R * dt
    E = -math.expm1(-x)
    with np.errstate(all="ignore"):
        s = r * r
        lr = np.log(r)
        q = (s / R - 1.0) * E
        direct = (q > -0.5) & np.isfinite(q)
        lg = np.where(direct, np.log1p(q), np.logaddexp(2.0 * lr - math.log(R) + math.log(E), -x))
        if x < _BIG_EXPONENT:
            em1x = math.expm1(x)
            t = em1x * s / R
            L = np.where(t < 1e300, np.log1p(t), 2.0 * lr - math.log(R) + math.log(em1x))
        else:
            L = x + lg
    return r, s, lr, -0.5 * lg, -0.5 * mu * L


def _phi_from_exponent(z, r, lr, a, b):
    with np.errstate(all="ignore"):
        near = z * np.exp(a + 1j * b)
        far = (z / r) * np.exp(a + lr + 1j * b)
        return np.where(r == 0.0, 0j, np.where(a < _BIG_A, near, far))


def _phi_numpy(z, dt, R, mu):
    z = np.asarray(z, dtype=np.complex128)
    if dt == 0:
        return z.copy()
    r, _, lr, a, b = _exponent_numpy(z, dt, R, mu)
    return _phi_from_exponent(z, r, lr, a, b)


def _psi0_numpy(z, R, mu):
    z = np.asarray(z, dtype=np.complex128)
    s = z.real**2 + z.imag**2
    return R * z - (1.0 + 1j * mu) * s * z


def _psi_numpy(z, dt, R, mu):
    z = np.asarray(z, dtype=np.complex128)
    if dt == 0:
        return _psi0_numpy(z, R, mu)
    c = 1.0 + 1j * mu
    r, s, lr, a, b = _exponent_numpy(z, dt, R, mu)
    with np.errstate(all="ignore"):
        g1 = R - c * s
        g2 = g1 * g1 + 2.0 * c * s * (s - R)
        taylor = z * (g1 + 0.5 * dt * g2)
        w = a + 1j * b
        small = z * np.expm1(w) / dt
        large = (_phi_from_exponent(z, r, lr, a, b) - z) / dt
        out = np.where(np.abs(w) <= 1.0, small, large)
        out = np.where(dt * (R + abs(c) * s) < TAYLOR_SCALE, taylor, out)
    return np.where(r == 0.0, 0j, out)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _cexpm1(re, im):
        # expm1(re + i im) without cancellation near zero
        h = math.sin(0.5 * im)
        return complex(math.expm1(re) * math.cos(im) - 2.0 * h * h, math.exp(re) * math.sin(im))

    @njit(cache=True, nogil=True)
    def _logaddexp(p, q):
        m = max(p, q)
        return m + math.log1p(math.exp(-abs(p - q)))

    @njit(cache=True, nogil=True)
    def _exponent(r, x, E, em1x, R, mu):
        s = r * r
        lr = math.log(r)
        q = (s / R - 1.0) * E
        if q > -0.5 and q < math.inf:
            lg = math.log1p(q)
        else:
            lg = _logaddexp(2.0 * lr - math.log(R) + math.log(E), -x)
        if x < _BIG_EXPONENT:
            t = em1x * s / R
            if t < 1e300:
                L = math.log1p(t)
            else:
                L = 2.0 * lr - math.log(R) + math.log(em1x)
        else:
            L = x + lg
        return lr, -0.5 * lg, -0.5 * mu * L

    @njit(cache=True, nogil=True)
    def _phi_point(zj, r, lr, a, b):
        if a < _BIG_A:
            ea = math.exp(a)
            return zj * complex(ea * math.cos(b), ea * math.sin(b))
        m = math.exp(a + lr)
        return (zj / r) * complex(m * math.cos(b), m * math.sin(b))

    @njit(cache=True, nogil=True)
    def _phi_numba_kernel(z, dt, R, mu, out):
        if dt == 0.0:
            out[:] = z
            return
        x = 2.0 * R * dt
        E = -math.expm1(-x)
        em1x = math.expm1(x) if x < _BIG_EXPONENT else 0.0
        for j in range(z.shape[0]):
            zj = z[j]
            r = abs(zj)
            if r == 0.0:
                out[j] = 0j
                continue
            lr, a, b = _exponent(r, x, E, em1x, R, mu)
            out[j] = _phi_point(zj, r, lr, a, b)

    @njit(cache=True, nogil=True)
    def _psi0_numba_kernel(z, R, mu, out):
        for j in range(z.shape[0]):
            zj = z[j]
            s = zj.real * zj.real + zj.imag * zj.imag
            out[j] = R * zj - complex(1.0, mu) * s * zj

    @njit(cache=True, nogil=True)
    def _psi_numba_kernel(z, dt, R, mu, out):
        if dt == 0.0:
            _psi0_numba_kernel(z, R, mu, out)
            return
        c = complex(1.0, mu)
        absc = abs(c)
        x = 2.0 * R * dt
        E = -math.expm1(-x)
        em1x = math.expm1(x) if x < _BIG_EXPONENT else 0.0
        for j in range(z.shape[0]):
            zj = z[j]
            r = abs(zj)
            if r == 0.0:
                out[j] = 0j
                continue
            s = r * r
            if dt * (R + absc * s) < TAYLOR_SCALE:
                g1 = R - c * s
                g2 = g1 * g1 + 2.0 * c * s * (s - R)
                out[j] = zj * (g1 + 0.5 * dt * g2)
                continue
            lr, a, b = _exponent(r, x, E, em1x, R, mu)
            if a * a + b * b <= 1.0:
                out[j] = zj * _cexpm1(a, b) / dt
            else:
                out[j] = (_phi_point(zj, r, lr, a, b) - zj) / dt
def _as_1d(z):
    z = np.asarray(z, dtype=np.complex128)
    return np.ascontiguousarray(z.reshape(-1)), z.shape


def _phi_numba(z, dt, R, mu):
    flat, shape = _as_1d(z)
    out = np.empty_like(flat)
    _phi_numba_kernel(flat, float(dt), float(R), float(mu), out)
    return out.reshape(shape)


def _psi_numba(z, dt, R, mu):
    flat, shape = _as_1d(z)
    out = np.empty_like(flat)
    _psi_numba_kernel(flat, float(dt), float(R), float(mu), out)
    return out.reshape(shape)


def _psi0_numba(z, R, mu):
    flat, shape = _as_1d(z)
    out = np.empty_like(flat)
    _psi0_numba_kernel(flat, float(R), float(mu), out)
    return out.reshape(shape)


if USE_NUMBA:
    phi_array, psi_array, psi0_array = _phi_numba, _psi_numba, _psi0_numba
else:
    phi_array, psi_array, psi0_array = _phi_numpy, _psi_numpy, _psi0_numpy
