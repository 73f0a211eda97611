"""Time steppers for the stochastic complex Ginzburg-Landau equation.

Three schemes share the same spectral machinery:

``esm``
    nonlinear flow on the grid, semigroup, plus the exactly sampled
    stochastic convolution increment.
``expsm``
    same deterministic map, but the plain Brownian increment is propagated
    by the semigroup.
``tam``
    tamed accelerated exponential Euler; drift ``psi0`` is scaled by
    ``1 / (1 + dt * ||P_N psi0(U)||)``.

Step functions work on natural-order coefficient arrays internally; the
public API wraps them in :class:`SolverState` / :class:`SpectralField`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Union

import numpy as np

from . import _kernels
from .config import Method, RunConfig
from .errors import DiagnosticBlowup, ResolutionMismatch
from .noise import BrownianIncrement, ConvIncrement, RngStream, sample_brownian_increment, sample_conv_increment
from .spectral import (
    SpectralField,
    coeffs_to_grid,
    grid_to_coeffs,
    integral_multiplier,
    pad_coeffs,
    semigroup_multiplier,
    sub_slice,
)

BLOWUP_THRESHOLD = 1e12


@dataclass(frozen=True)
class SolverState:
    field: SpectralField
    step_index: int = 0
    t: float = 0.0


@dataclass
class Trajectory:
    config: RunConfig
    snapshots: list[tuple[int, SpectralField]] = field(default_factory=list)
    steps: np.ndarray = None
    t: np.ndarray = None
    l2: np.ndarray = None
    l4: np.ndarray = None

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1][1]

    def diagnostics_csv(self) -> str:
        lines = ["step,t,l2,l4"]
        for s, t, a, b in zip(self.steps, self.t, self.l2, self.l4):
            lines.append(f"{int(s)},{float(t)!r},{float(a)!r},{float(b)!r}")
        return "\n".join(lines) + "\n"


def taming_factor(drift_norm: float, dt: float) -> float:
    return 1.0 / (1.0 + dt * drift_norm)


class Stepper:
    """Precomputed multipliers for one (N, dt, model) combination."""

    def __init__(self, N: int, dt: float, model, dealias: bool = False):
        self.N = N
        self.dt = dt
        self.R = model.R
        self.mu = model.mu
        self.sigma = model.sigma
        self.dealias = dealias
        self.E = semigroup_multiplier(N, dt, model.nu)
        self.Eint = integral_multiplier(N, dt, model.nu)

    def _pointwise(self, a: np.ndarray, fn) -> np.ndarray:
        # pointwise map on the grid, then back to the N retained modes
        if not self.dealias:
            return grid_to_coeffs(fn(coeffs_to_grid(a)))
        M = 2 * self.N
        return grid_to_coeffs(fn(coeffs_to_grid(pad_coeffs(a, M))))[sub_slice(M, self.N)]

    def flow_part(self, a: np.ndarray) -> np.ndarray:
        """e^{dt A} P_N Phi_dt(u)."""
        b = self._pointwise(a, lambda u: _kernels.phi_array(u, self.dt, self.R, self.mu))
        return self.E * b

    def drift(self, a: np.ndarray) -> np.ndarray:
        return self._pointwise(a, lambda u: _kernels.psi0_array(u, self.R, self.mu))

    def _noise(self, inc, cls) -> np.ndarray:
        if not isinstance(inc, cls):
            raise ResolutionMismatch(f"expected {cls.__name__}, got {type(inc).__name__}")
        if inc.N < self.N:
            raise ResolutionMismatch(f"increment resolution {inc.N} < solver resolution {self.N}")
        if not math.isclose(inc.dt, self.dt, rel_tol=1e-12):
            raise ResolutionMismatch(f"increment step {inc.dt!r} != solver step {self.dt!r}")
        return inc.values[sub_slice(inc.N, self.N)]

    def esm(self, a: np.ndarray, inc: ConvIncrement) -> np.ndarray:
        out = self.flow_part(a)
        if self.sigma:
            out += self.sigma * self._noise(inc, ConvIncrement)
        return out

    def expsm(self, a: np.ndarray, inc: BrownianIncrement) -> np.ndarray:
        out = self.flow_part(a)
        if self.sigma:
            out += self.sigma * self.E * self._noise(inc, BrownianIncrement)
        return out

    def tam(self, a: np.ndarray, inc: ConvIncrement) -> np.ndarray:
        d = self.drift(a)
        tame = taming_factor(float(np.sqrt(np.sum(d.real**2 + d.imag**2))), self.dt)
        out = self.E * a + tame * self.Eint * d
        if self.sigma:
            out += self.sigma * self._noise(inc, ConvIncrement)
        return out

    def step_fn(self, method: Method) -> Callable:
        return {Method.ESM: self.esm, Method.EXPSM: self.expsm, Method.TAM: self.tam}[Method(method)]


@lru_cache(maxsize=32)
def _stepper(N, dt, model, dealias) -> Stepper:
    return Stepper(N, dt, model, dealias)


def stepper_for(cfg: RunConfig) -> Stepper:
    return _stepper(cfg.N, cfg.dt, cfg.model, cfg.dealias)


def _advance(state: SolverState, inc, cfg: RunConfig, method: Method) -> SolverState:
    if state.field.N != cfg.N:
        raise ResolutionMismatch(f"state resolution {state.field.N} != config N={cfg.N}")
    a = stepper_for(cfg).step_fn(method)(state.field.coeffs, inc)
    m = state.step_index + 1
    return SolverState(SpectralField(cfg.N, a), m, m * cfg.dt)


def esm_step(state: SolverState, inc: ConvIncrement, cfg: RunConfig) -> SolverState:
    return _advance(state, inc, cfg, Method.ESM)


def expsm_step(state: SolverState, inc: BrownianIncrement, cfg: RunConfig) -> SolverState:
    return _advance(state, inc, cfg, Method.EXPSM)


def tam_step(state: SolverState, inc: ConvIncrement, cfg: RunConfig) -> SolverState:
    return _advance(state, inc, cfg, Method.TAM)


def increment_kind(method: Method) -> str:
    return "brownian" if Method(method) is Method.EXPSM else "conv"


def stream_noise(cfg: RunConfig, stream_id: int = 0) -> Iterator:
    """Independent per-step increments for a single-resolution run (counter = step)."""
    base = RngStream(cfg.seed, stream_id)
    sample = sample_brownian_increment if increment_kind(cfg.method) == "brownian" else sample_conv_increment
    for m in range(cfg.M):
        yield sample(base.at(m), cfg.N, cfg.dt, cfg.noise)


def initial_field(cfg: RunConfig) -> SpectralField:
    if cfg.init_kind == "zero":
        return SpectralField.zeros(cfg.N)
    return plane_wave(cfg.N, cfg.init_k, cfg.model, 0.0)


def plane_wave(N: int, k: int, model, t: float) -> SpectralField:
    """Exact deterministic travelling-wave solution A exp(i(2 pi k x - omega t))."""
    lam = (2.0 * math.pi * k) ** 2
    A2 = model.R - lam
    if A2 <= 0:
        raise ValueError(f"plane wave k={k} needs R > lambda_k = {lam}")
    omega = model.nu * lam + model.mu * A2
    return SpectralField.single_mode(N, k, math.sqrt(A2) * np.exp(-1j * omega * t))


NoiseSource = Union[Iterable, Callable[[int], object]]


def run(
    cfg: RunConfig,
    noise_source: NoiseSource | None = None,
    u0: SpectralField | None = None,
    *,
    l4: bool = True,
) -> Trajectory:
    """Integrate ``cfg.M`` steps from ``u0`` (default: from ``cfg.init_kind``).

    ``noise_source`` is an iterable of increments or a callable ``m -> inc``;
    when omitted increments are drawn from ``stream_noise(cfg)``.
    """
    M = cfg.M
    method = cfg.method
    stepper = stepper_for(cfg)
    step = stepper.step_fn(method)
    a = (initial_field(cfg) if u0 is None else u0).coeffs.copy()
    if a.shape != (cfg.N,):
        raise ResolutionMismatch(f"u0 has {a.shape[0]} modes, config N={cfg.N}")

    if noise_source is None:
        noise_source = stream_noise(cfg)
    if callable(noise_source):
        incs = (noise_source(m) for m in range(M))
    else:
        incs = iter(noise_source)

    l2s = np.empty(M + 1)
    l4s = np.full(M + 1, np.nan)
    traj = Trajectory(cfg)

    def record(m, a):
        l2s[m] = math.sqrt(float(np.sum(a.real**2 + a.imag**2)))
        if l4:
            l4s[m] = float(np.mean(np.abs(coeffs_to_grid(a)) ** 4) ** 0.25)
        if m % cfg.record_every == 0 or m == M:
            traj.snapshots.append((m, SpectralField(cfg.N, a.copy())))

    record(0, a)
    for m in range(M):
        try:
            inc = next(incs)
        except StopIteration:
            raise ValueError(f"noise source exhausted after {m} of {M} steps") from None
        a = step(a, inc)
        record(m + 1, a)
        if not l2s[m + 1] <= BLOWUP_THRESHOLD:
            raise DiagnosticBlowup(m + 1, float(l2s[m + 1]))
    traj.steps = np.arange(M + 1)
    traj.t = traj.steps * cfg.dt
    traj.l2 = l2s
    traj.l4 = l4s
    return traj
