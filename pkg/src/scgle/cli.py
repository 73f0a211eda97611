"""Command line entry point: ``scgle {simulate,converge,sample-noise,validate}``.

Exit codes: 0 success, 1 validation/property failure or bad usage,
2 runtime blowup, 3 I/O error.  Failures print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .checks import run_checks
from .config import RunConfig, config_from_flat, load_config
from .convergence import LadderSpec, run_ladder
from .errors import DiagnosticBlowup, ParseError, ScgleError, ValidationError
from .integrators import run
from .noise import NoiseHierarchy, RngStream, increments_to_csv_rows
from .spectral import write_field

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _fail(EXIT_INVALID, "UsageError", message)


def _fail(code: int, kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message), "exit": code}) + "\n")
    raise SystemExit(code)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file (or flat JSON)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key; repeatable")
    p.add_argument("--seed", type=int, help="run.seed (takes precedence over SCGLE_SEED)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scgle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"scgle {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate one trajectory")
    _common(p)
    p.add_argument("--method", choices=["esm", "expsm", "tam"])
    p.add_argument("--record-every", type=int)

    p = sub.add_parser("converge", help="coupled-resolution RMSE ladder")
    _common(p)
    p.add_argument("--method", choices=["esm", "expsm", "tam"])
    p.add_argument("--base-n", type=int, default=64)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--scaling", type=float, default=1.0, help="constant c in N^2 dt = c")
    p.add_argument("--from-manifest", help="re-run exactly the invocation recorded in a manifest")

    p = sub.add_parser("sample-noise", help="emit coupled noise increments as CSV")
    _common(p)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--steps", type=int, default=1, help="coarse steps to emit")
    p.add_argument("--kind", choices=["conv", "brownian"], default="conv")
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("validate", help="run the fast property suite")
    _common(p)
    return parser


def _load(args) -> RunConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if getattr(args, "method", None):
        overrides.append(f"run.method={args.method}")
    if getattr(args, "record_every", None):
        overrides.append(f"run.record_every={args.record_every}")
    return load_config(args.config, overrides)


def _hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _write_manifest(out: Path, command: str, cfg: RunConfig, extra: dict, outputs: list[str]) -> None:
    inputs = {"command": command, "config": cfg.to_flat(), **extra}
    manifest = {
        **inputs,
        "version": __version__,
        "input_hash": _hash(inputs),
        "outputs": outputs,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    traj = run(cfg)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for m, f in traj.snapshots:
        name = f"snapshots/step_{m:08d}.scgl"
        write_field(out / name, f)
        names.append(name)
    (out / "diagnostics.csv").write_text(traj.diagnostics_csv())
    _write_manifest(out, "simulate", cfg, {}, names + ["diagnostics.csv"])
    print(json.dumps({"steps": cfg.M, "snapshots": len(names), "final_l2": float(traj.l2[-1])}))
    return EXIT_OK


def cmd_converge(args) -> int:
    if args.from_manifest:
        man = json.loads(Path(args.from_manifest).read_text())
        if man.get("command") != "converge":
            raise ValidationError(f"{args.from_manifest} is not a converge manifest")
        cfg = config_from_flat(man["config"])
        spec = LadderSpec(**man["ladder"])
        report_name = man.get("report", "report.csv")
    else:
        cfg = _load(args)
        spec = LadderSpec(base_N=args.base_n, levels=args.levels, J=args.samples, parabolic=True, c=args.scaling)
        report_name = "report.csv"
    out = Path(args.out)
    if out.suffix == ".csv":
        out, report_name = out.parent, out.name
    out.mkdir(parents=True, exist_ok=True)

    report = run_ladder(spec, cfg, cfg.method, seed=cfg.seed, threads=max(1, args.threads))
    stem = Path(report_name).stem
    (out / report_name).write_text(report.csv())
    (out / f"{stem}.json").write_text(report.summary_json())
    (out / f"{stem}.gp").write_text(report.gnuplot(report_name))
    ladder = {"base_N": spec.base_N, "levels": spec.levels, "J": spec.J, "parabolic": spec.parabolic, "c": spec.c}
    _write_manifest(out, "converge", cfg, {"ladder": ladder, "report": report_name},
                    [report_name, f"{stem}.json", f"{stem}.gp"])
    slope = report.fit_dt.slope if report.fit_dt else None
    print(json.dumps({"report": str(out / report_name), "slope_dt": slope, "flags": report.flags}))
    return EXIT_INVALID if report.flags["invalid_levels"] else EXIT_OK


def cmd_sample_noise(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    path = out if out.suffix == ".csv" else out / "noise.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    hier = NoiseHierarchy(cfg.N, cfg.dt, args.levels, cfg.noise, cfg.model, args.kind)
    stream = RngStream(cfg.seed, args.stream)
    rows = ["level,step,k,re,im"]
    per_level = hier.sample_path(stream, args.steps)
    for lvl, incs in enumerate(per_level):
        for step, inc in enumerate(incs):
            rows.extend(increments_to_csv_rows(lvl, step, inc))
    path.write_text("\n".join(rows) + "\n")
    _write_manifest(path.parent, "sample-noise", cfg,
                    {"levels": args.levels, "steps": args.steps, "kind": args.kind, "stream": args.stream},
                    [path.name])
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    results = run_checks(cfg)
    manifest = {
        "config": cfg.to_flat(),
        "passed": all(r.passed for r in results),
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
    }
    print(json.dumps(manifest, indent=2))
    return EXIT_OK if manifest["passed"] else EXIT_INVALID


COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "sample-noise": cmd_sample_noise,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DiagnosticBlowup as exc:
        _fail(EXIT_BLOWUP, "DiagnosticBlowup", exc)
    except (ParseError, ValidationError) as exc:
        _fail(EXIT_INVALID, type(exc).__name__, exc)
    except ScgleError as exc:
        _fail(EXIT_INVALID, type(exc).__name__, exc)
    except OSError as exc:
        _fail(EXIT_IO, type(exc).__name__, exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
