"""Deeper RMSE ladders than the acceptance gate runs, with local slopes.

    python3 scripts/ladder_study.py --levels 6 --samples 8
    python3 scripts/ladder_study.py --scaling 0.0625

Prints, per level, the full-norm RMSE, its projected part and the fine-mode
tail, followed by the slope between consecutive levels.  Useful to see where
the observed rate sits relative to the asymptotic one.
"""

import argparse
import math
import os
import time

from scgle.config import ModelParams, RunConfig
from scgle.convergence import LadderSpec, run_ladder


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--base-n", type=int, default=64)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--scaling", type=float, default=1.0, help="c in N^2 dt = c")
    ap.add_argument("--method", default="esm")
    ap.add_argument("--defect", action="store_true", help="mu=-3, nu=3 instead of mu=nu=1")
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args(argv)

    model = ModelParams(mu=-3.0, nu=3.0) if args.defect else ModelParams()
    spec = LadderSpec(args.base_n, args.levels, args.samples, True, args.scaling)
    t0 = time.perf_counter()
    rep = run_ladder(spec, RunConfig(model=model, seed=args.seed), args.method, threads=args.threads)
    print(f"{'N':>6} {'dt':>10} {'rmse':>10} {'projected':>10} {'tail':>10} {'local slope':>12}")
    prev = None
    for p in rep.levels:
        local = "" if prev is None else f"{math.log(prev.rmse / p.rmse) / math.log(prev.dt / p.dt):12.3f}"
        print(f"{p.N:>6} {p.dt:>10.3e} {p.rmse:>10.4g} {p.rmse_projected:>10.4g} {p.tail_norm:>10.4g} {local}")
        prev = p
    print(f"fitted slope vs dt: {rep.fit_dt.slope:.3f}   ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
