"""Fast property checks run by ``scgle validate``.

Each check returns a :class:`CheckResult`; nothing here raises on a failed
property, so the CLI can emit a full manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import RunConfig
from .noise import (
    RngStream,
    analytic_coupled_variance,
    couple_down,
    sample_conv_increment,
    variance_conv,
)
from .spectral import (
    GridField,
    SpectralField,
    eigenvalues,
    grid_norm_l2,
    lowest_mode,
    norm_l2,
    semigroup_apply,
    sub_slice,
    to_coeffs,
    to_grid,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check(name, fn) -> CheckResult:
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failed check
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")
    return CheckResult(name, bool(ok), detail)


def flow_bounds(cfg: RunConfig, n: int = 2000, seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    R, mu = cfg.model.R, cfg.model.mu
    mag = 10 ** rng.uniform(-3, 3, n)
    z = mag * np.exp(2j * np.pi * rng.random(n))
    worst_growth = worst_contract = worst_circle = 0.0
    for dt in (0.0, cfg.dt / 4, cfg.dt, min(0.999, 4 * cfg.dt)):
        phi = _kernels.phi_array(z, dt, R, mu)
        if not np.all(np.isfinite(phi)):
            return False, f"non-finite flow at dt={dt}"
        with np.errstate(over="ignore"):
            bound = np.exp(R * dt) * np.abs(z)
        worst_growth = max(worst_growth, float(np.max(np.abs(phi) - bound)))
        outside = np.abs(z) >= math.sqrt(R)
        if outside.any():
            worst_contract = max(worst_contract, float(np.max(np.abs(phi[outside]) - np.abs(z[outside]))))
        zc = math.sqrt(R) * np.exp(2j * np.pi * rng.random(16))
        pc = _kernels.phi_array(zc, dt, R, mu)
        worst_circle = max(worst_circle, float(np.max(np.abs(np.abs(pc) - math.sqrt(R)) / math.sqrt(R))))
    ok = worst_growth <= 1e-12 * max(1.0, float(np.max(mag))) and worst_contract <= 1e-12 * float(np.max(mag)) \
        and worst_circle <= 1e-12
    return ok, f"growth excess {worst_growth:.3g}, contraction excess {worst_contract:.3g}, circle drift {worst_circle:.3g}"


def sampler_variance(cfg: RunConfig, n: int = 4000) -> tuple[bool, str]:
    N = max(16, min(cfg.N, 64))
    draws = np.stack([
        sample_conv_increment(RngStream(cfg.seed, 7, c), N, cfg.dt, cfg.noise).values for c in range(n)
    ])
    k0 = lowest_mode(N)
    worst = 0.0
    for k in (0, 1, 7):
        v = variance_conv(k, cfg.dt, cfg.noise)
        col = draws[:, k - k0]
        for part in (col.real, col.imag):
            worst = max(worst, abs(np.mean(part**2) / v - 1.0))
    # 4000 draws: relative sd of a variance estimate ~ sqrt(2/n) = 2.2%
    return worst < 0.12, f"worst relative variance error {worst:.3g} over {n} draws"


def coupling_identity(cfg: RunConfig) -> tuple[bool, str]:
    ks = np.arange(-8, 9)
    an = analytic_coupled_variance(ks, cfg.dt, cfg.noise)
    ex = variance_conv(ks, cfg.dt, cfg.noise)
    rel = float(np.max(np.abs(an / ex - 1)))
    N = 16
    fine = [sample_conv_increment(RngStream(cfg.seed, 9, j), 2 * N, cfg.dt / 4, cfg.noise) for j in range(4)]
    coarse = couple_down(fine, cfg.model)
    lam = eigenvalues(N)
    sl = sub_slice(2 * N, N)
    direct = sum(
        np.exp(-(1 + 1j * cfg.model.nu) * lam * (3 - j) * cfg.dt / 4) * fine[j].values[sl] for j in range(4)
    )
    alg = float(np.max(np.abs(coarse.values - direct)))
    return rel < 1e-12 and alg < 1e-12, f"variance identity {rel:.3g}, aggregation {alg:.3g}"


def parseval(cfg: RunConfig) -> tuple[bool, str]:
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for N in (cfg.N, 15, 16):
        g = GridField(N, rng.standard_normal(N) + 1j * rng.standard_normal(N))
        f = to_coeffs(g)
        worst = max(worst, abs(norm_l2(f) - grid_norm_l2(g)) / grid_norm_l2(g))
        worst = max(worst, float(np.max(np.abs(to_grid(f).values - g.values))) / grid_norm_l2(g))
    return worst < 1e-12, f"worst relative error {worst:.3g}"


def semigroup_law(cfg: RunConfig) -> tuple[bool, str]:
    rng = np.random.default_rng(cfg.seed + 1)
    N = cfg.N
    f = SpectralField(N, rng.standard_normal(N) + 1j * rng.standard_normal(N))
    s, t = 0.3 * cfg.dt, 0.7 * cfg.dt
    a = semigroup_apply(semigroup_apply(f, s, cfg.model), t, cfg.model)
    b = semigroup_apply(f, s + t, cfg.model)
    err = float(np.max(np.abs(a.coeffs - b.coeffs))) / norm_l2(f)
    contract = norm_l2(b) <= norm_l2(f) * (1 + 1e-15)
    return err < 1e-12 and contract, f"composition error {err:.3g}, contraction {'ok' if contract else 'violated'}"


CHECKS = {
    "flow_bounds": flow_bounds,
    "sampler_variance": sampler_variance,
    "coupling_identity": coupling_identity,
    "parseval": parseval,
    "semigroup_law": semigroup_law,
}


def run_checks(cfg: RunConfig) -> list[CheckResult]:
    return [_check(name, lambda fn=fn: fn(cfg)) for name, fn in CHECKS.items()]
