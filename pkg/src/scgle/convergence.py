"""Monte-Carlo strong-convergence harness.

For each level the coarse run (N, dt) and the refined run (2N, dt/4) are
driven by one noise path: the refined increments are sampled and the coarse
ones aggregated from them.  The strong error estimate is

    rmse = sqrt( (1/J) sum_j || U_coarse(T) - U_fine(T) ||^2 ),

the L2 norm of the difference of the two functions on the torus.  It splits
exactly as ``rmse^2 = rmse_projected^2 + tail^2`` where ``rmse_projected``
compares the coarse state with the fine state restricted to the coarse modes
and ``tail`` is the norm of the fine modes the coarse run cannot represent;
both parts are reported alongside.

Sample ``j`` of level ``l`` uses Philox stream ``l << 32 | j``, so results
do not depend on how samples are scheduled across threads.  Squared errors
are reduced with :func:`math.fsum` in sample order (correctly rounded, hence
order independent).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .config import Method, RunConfig
from .errors import DegeneratePoints, DiagnosticBlowup, InsufficientLevels
from .integrators import increment_kind, run
from .noise import NoiseHierarchy, RngStream, sample_brownian_increment, sample_conv_increment
from .spectral import sub_slice

FAILURE_LIMIT = 0.10
UNDER_SAMPLED_RATIO = 0.5
_INDEPENDENT_BIT = 1 << 63


@dataclass(frozen=True)
class LadderSpec:
    base_N: int = 64
    levels: int = 4
    J: int = 20
    parabolic: bool = True
    c: float = 1.0

    def level_grid(self, template: RunConfig) -> list[tuple[int, float]]:
        out = []
        for l in range(self.levels):
            N = self.base_N * 2**l
            dt = self.c / N**2 if self.parabolic else template.dt / 4**l
            out.append((N, dt))
        return out


@dataclass
class PairResult:
    level: int
    N: int
    dt: float
    rmse: float
    stderr: float
    failures: int
    samples: int
    tail_norm: float = 0.0
    rmse_projected: float = 0.0

    @property
    def under_sampled(self) -> bool:
        return not (self.rmse > 0 and self.stderr / self.rmse < UNDER_SAMPLED_RATIO)

    @property
    def invalid(self) -> bool:
        return self.failures > FAILURE_LIMIT * self.samples or not math.isfinite(self.rmse)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float


@dataclass
class ConvergenceReport:
    method: str
    label: str
    seed: int
    levels: list[PairResult]
    fit_dt: SlopeFit | None
    fit_N: SlopeFit | None
    flags: dict = field(default_factory=dict)

    def csv(self) -> str:
        lines = ["level,N,dt,rmse,stderr,failures"]
        for p in self.levels:
            lines.append(f"{p.level},{p.N},{p.dt!r},{p.rmse!r},{p.stderr!r},{p.failures}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "method": self.method,
            "setting": self.label,
            "seed": self.seed,
            "slope_dt": None if self.fit_dt is None else asdict(self.fit_dt),
            "slope_N": None if self.fit_N is None else asdict(self.fit_N),
            "levels": [
                {
                    "level": p.level, "N": p.N, "dt": p.dt, "rmse": p.rmse, "stderr": p.stderr,
                    "failures": p.failures, "samples": p.samples, "tail_norm": p.tail_norm,
                    "rmse_projected": p.rmse_projected,
                    "under_sampled": p.under_sampled, "invalid": p.invalid,
                }
                for p in self.levels
            ],
            "flags": self.flags,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def gnuplot(self, csv_name: str = "report.csv") -> str:
        s = self.fit_dt.slope if self.fit_dt else float("nan")
        return (
            "set datafile separator ','\n"
            "set logscale xy\n"
            "set xlabel 'dt'\n"
            "set ylabel 'RMSE'\n"
            "set key left top\n"
            f"set title '{self.method} {self.label}: fitted slope {s:.3f}'\n"
            f"plot '{csv_name}' using 3:4:5 skip 1 with yerrorlines title '{self.method}', \\\n"
            f"     '{csv_name}' using 3:(($4)*(($3)/{self.levels[0].dt!r})**0.5) skip 1 with lines dt 2 title 'dt^(1/2)'\n"
        )


def fit_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """Ordinary least squares of ln y against ln x."""
    if len(points) < 2:
        raise DegeneratePoints("need at least two points")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DegeneratePoints("all coordinates must be positive")
    lx, ly = np.log(x), np.log(y)
    xm, ym = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - xm) ** 2))
    if sxx == 0.0:
        raise DegeneratePoints("all x values are equal")
    slope = float(np.sum((lx - xm) * (ly - ym)) / sxx)
    intercept = float(ym - slope * xm)
    residual = float(np.sqrt(np.mean((ly - (intercept + slope * lx)) ** 2)))
    return SlopeFit(slope, intercept, residual)


def _sample_error(cfg: RunConfig, stream: RngStream, coupled: bool, refine: bool) -> tuple[float, float]:
    """Squared projected coarse/fine end-time error and squared fine tail for one sample."""
    M = cfg.M
    kind = increment_kind(cfg.method)
    if not refine:
        hier = NoiseHierarchy(cfg.N, cfg.dt, 1, cfg.noise, cfg.model, kind)
        incs = hier.sample_path(stream, M)[0]
        a = run(cfg, incs, l4=False).final.coeffs
        b = run(cfg, incs, l4=False).final.coeffs
        return float(np.sum(np.abs(a - b) ** 2)), 0.0

    fine_cfg = cfg.refined()
    hier = NoiseHierarchy(cfg.N, cfg.dt, 2, cfg.noise, cfg.model, kind)
    coarse_incs, fine_incs = hier.sample_path(stream, M)
    if not coupled:
        other = RngStream(stream.seed, stream.stream_id | _INDEPENDENT_BIT)
        sample = sample_brownian_increment if kind == "brownian" else sample_conv_increment
        coarse_incs = [sample(other.at(m), cfg.N, cfg.dt, cfg.noise) for m in range(M)]
    fine = run(fine_cfg, fine_incs, l4=False).final.coeffs
    coarse = run(cfg, coarse_incs, l4=False).final.coeffs
    sl = sub_slice(fine_cfg.N, cfg.N)
    diff = coarse - fine[sl]
    tail = fine.copy()
    tail[sl] = 0
    return float(np.sum(diff.real**2 + diff.imag**2)), float(np.sum(tail.real**2 + tail.imag**2))


def rmse_pair(
    cfg: RunConfig,
    J: int,
    *,
    seed: int | None = None,
    level: int = 0,
    coupled: bool = True,
    refine: bool = True,
    threads: int = 1,
) -> PairResult:
    """RMSE between (N, dt) and (2N, dt/4) end states over ``J`` coupled samples."""
    seed = cfg.seed if seed is None else seed

    def one(j):
        stream = RngStream(seed, (level << 32) | j)
        try:
            return _sample_error(cfg, stream, coupled, refine)
        except DiagnosticBlowup:
            return None

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(J)))
    else:
        results = [one(j) for j in range(J)]

    ok = [r for r in results if r is not None]
    failures = J - len(ok)
    n = len(ok)
    if n == 0:
        return PairResult(level, cfg.N, cfg.dt, math.nan, math.nan, failures, J)
    sq = [r[0] + r[1] for r in ok]
    mean_sq = math.fsum(sq) / n
    rmse = math.sqrt(mean_sq)
    if n > 1 and rmse > 0:
        var = math.fsum((e - mean_sq) ** 2 for e in sq) / (n - 1)
        # delta method: se(sqrt(m)) = se(m) / (2 sqrt(m))
        stderr = math.sqrt(var / n) / (2.0 * rmse)
    else:
        stderr = 0.0 if n > 1 else math.nan
    tail = math.sqrt(math.fsum(r[1] for r in ok) / n)
    proj = math.sqrt(math.fsum(r[0] for r in ok) / n)
    return PairResult(level, cfg.N, cfg.dt, rmse, stderr, failures, J, tail, proj)


def setting_label(cfg: RunConfig) -> str:
    return f"mu={cfg.model.mu:g},nu={cfg.model.nu:g},noise={cfg.noise.kind.value}"


def theory_flags(cfg: RunConfig) -> dict:
    return {
        "nu_in_theory_range": cfg.model.nu_in_theory_range,
        "noise_r": cfg.noise.r,
        "noise_in_theory_range": cfg.noise.in_theory_range,
    }


def run_ladder(
    spec: LadderSpec,
    template: RunConfig,
    method: Method | str | None = None,
    *,
    seed: int | None = None,
    threads: int = 1,
    coupled: bool = True,
) -> ConvergenceReport:
    if spec.levels < 2:
        raise InsufficientLevels(f"a ladder needs at least 2 levels (got {spec.levels})")
    method = Method(method or template.method)
    seed = template.seed if seed is None else seed
    pairs = []
    for l, (N, dt) in enumerate(spec.level_grid(template)):
        cfg = replace(template, N=N, dt=dt, method=method, seed=seed)
        pairs.append(rmse_pair(cfg, spec.J, seed=seed, level=l, coupled=coupled, threads=threads))

    good = [p for p in pairs if not p.invalid and p.rmse > 0]
    fit_dt = fit_N = None
    if len(good) >= 2:
        fit_dt = fit_slope([(p.dt, p.rmse) for p in good])
        fit_N = fit_slope([(p.N, p.rmse) for p in good])
    flags = theory_flags(template)
    flags["valid_levels"] = len(good)
    flags["under_sampled_levels"] = [p.level for p in pairs if p.under_sampled]
    flags["invalid_levels"] = [p.level for p in pairs if p.invalid]
    return ConvergenceReport(method.value, setting_label(template), int(seed), pairs, fit_dt, fit_N, flags)


def second_moment_profile(cfg: RunConfig, J: int, *, seed: int | None = None, stream_base: int = 0) -> np.ndarray:
    """Monte-Carlo estimate of E||U^m||^2 for m = 0..M (independent samples)."""
    from .integrators import stream_noise

    seed = cfg.seed if seed is None else seed
    acc = np.zeros(cfg.M + 1)
    c = replace(cfg, seed=seed)
    for j in range(J):
        tr = run(c, stream_noise(c, stream_base + j), l4=False)
        acc += tr.l2**2
    return acc / J
