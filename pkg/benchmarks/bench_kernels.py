"""Numba vs numpy timings for the pointwise kernels and a full ESM run.

    python3 benchmarks/bench_kernels.py [--sizes 64 1024 65536] [--repeat 20]

Kernel timings call both implementations in-process.  The end-to-end run is
timed in a subprocess per backend so that ``SCGLE_NUMBA`` selects the
dispatch exactly as a user would.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from scgle import _kernels

RUN_SNIPPET = """
import json, time
from dataclasses import replace
from scgle import RunConfig, run, _kernels
cfg = RunConfig(N={N}, dt=2.0**-18)
cfg = replace(cfg, model=replace(cfg.model, T=2.0**-10))
run(cfg, l4=False)  # warm-up (JIT compile or cache load)
t0 = time.perf_counter()
run(cfg, l4=False)
print(json.dumps({{"backend": _kernels.BACKEND, "seconds": time.perf_counter() - t0, "steps": cfg.M}}))
"""


def time_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        z = 60 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        impls = {
            "phi": (_kernels._phi_numpy, getattr(_kernels, "_phi_numba", None), (z, 2.0**-12, 4096.0, 1.0)),
            "psi": (_kernels._psi_numpy, getattr(_kernels, "_psi_numba", None), (z, 2.0**-12, 4096.0, 1.0)),
        }
        for name, (np_fn, nb_fn, args) in impls.items():
            t_np = min(timeit.repeat(lambda: np_fn(*args), number=1, repeat=repeat))
            row = {"kernel": name, "n": n, "numpy_us": 1e6 * t_np}
            if nb_fn is not None and _kernels.HAVE_NUMBA:
                nb_fn(*args)  # compile
                t_nb = min(timeit.repeat(lambda: nb_fn(*args), number=1, repeat=repeat))
                row["numba_us"] = 1e6 * t_nb
                row["speedup"] = t_np / t_nb
                row["max_abs_diff"] = float(np.max(np.abs(np_fn(*args) - nb_fn(*args))))
            rows.append(row)
    return rows


def time_runs(N):
    out = []
    for flag in ("1", "0"):
        env = dict(os.environ, SCGLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", RUN_SNIPPET.format(N=N)], env=env,
                             capture_output=True, text=True, check=True)
        out.append(json.loads(res.stdout.strip().splitlines()[-1]))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 1024, 65536])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--run-N", type=int, default=256)
    args = ap.parse_args(argv)

    print(f"{'kernel':<6} {'n':>7} {'numpy us':>10} {'numba us':>10} {'speedup':>8} {'max diff':>10}")
    for r in time_kernels(args.sizes, args.repeat):
        print(f"{r['kernel']:<6} {r['n']:>7} {r['numpy_us']:>10.1f} {r.get('numba_us', float('nan')):>10.1f} "
              f"{r.get('speedup', float('nan')):>8.2f} {r.get('max_abs_diff', float('nan')):>10.2e}")
    print()
    for r in time_runs(args.run_N):
        print(f"ESM run N={args.run_N}, {r['steps']} steps, backend={r['backend']}: {r['seconds']:.3f} s")


if __name__ == "__main__":
    main()
