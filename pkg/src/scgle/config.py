"""Run parameters, noise covariance rule and config-file loading.

Config files are flat key/value documents, one ``key = value`` per line,
``#`` starting a comment.  A flat JSON object with the same keys is accepted
too.  Numeric values may be written as simple arithmetic such as ``2^-12``
or ``5*2**-23``.

Recognised keys::

    model.R  model.mu  model.nu  model.sigma  model.T
    noise.kind (regular|white|custom)  noise.r  noise.epsilon  noise.q.<k>
    run.N  run.dt  run.seed  run.method (esm|expsm|tam)  run.record_every
    run.dealias (true|false)
    init.kind (zero|plane_wave)  init.k
"""

from __future__ import annotations

import ast
import enum
import json
import math
import operator
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import MissingMode, ParseError, ValidationError

SEED_ENV = "SCGLE_SEED"
M_TOLERANCE = 1e-9
# |nu| <= sqrt(3) is needed for the fourth-moment bound behind the convergence theorem.
NU_THEORY_BOUND = math.sqrt(3.0)


class NoiseKind(str, enum.Enum):
    REGULAR = "regular"
    WHITE = "white"
    CUSTOM = "custom"


class Method(str, enum.Enum):
    ESM = "esm"
    EXPSM = "expsm"
    TAM = "tam"


@dataclass(frozen=True)
class ModelParams:
    R: float = 2.0**12
    mu: float = 1.0
    nu: float = 1.0
    sigma: float = 2.0**6
    T: float = 2.0**-12

    def __post_init__(self):
        _require(math.isfinite(self.R) and self.R > 0, "model.R", "must be > 0", self.R)
        _require(math.isfinite(self.T) and self.T > 0, "model.T", "must be > 0", self.T)
        _require(math.isfinite(self.sigma) and self.sigma >= 0, "model.sigma", "must be >= 0", self.sigma)
        _require(math.isfinite(self.mu), "model.mu", "must be finite", self.mu)
        _require(math.isfinite(self.nu), "model.nu", "must be finite", self.nu)

    @property
    def nu_in_theory_range(self) -> bool:
        return abs(self.nu) <= NU_THEORY_BOUND


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = NoiseKind.REGULAR
    r: float = 0.0
    epsilon: float = 5e-4
    custom_qk: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.custom_qk is not None:
            items = self.custom_qk.items() if isinstance(self.custom_qk, Mapping) else self.custom_qk
            object.__setattr__(self, "custom_qk", tuple(sorted((int(k), float(q)) for k, q in items)))
        _require(0 < self.epsilon < 1.5, "noise.epsilon", "must lie in (0, 3/2)", self.epsilon)
        if self.kind is NoiseKind.REGULAR:
            _require(self.r == 0.0, "noise.r", "must be 0 for regular noise", self.r)
        elif self.kind is NoiseKind.WHITE:
            object.__setattr__(self, "r", -0.5)
        else:
            _require(bool(self.custom_qk), "noise.q", "custom noise needs at least one noise.q.<k> entry", None)
            for k, q in self.custom_qk:
                _require(q > 0, f"noise.q.{k}", "must be > 0", q)

    @property
    def in_theory_range(self) -> bool:
        """Convergence theory covers r >= 0 only; white noise sits at r = -1/2."""
        return self.r >= 0.0


def qk_value(spec: NoiseSpec, k: int) -> float:
    """Per-mode variance q_k of the complex Q-Wiener process."""
    if spec.kind is NoiseKind.WHITE:
        return 1.0
    if spec.kind is NoiseKind.REGULAR:
        if k == 0:
            return 1.0
        return float(abs(k)) ** (-1.0 - 2.0 * spec.epsilon)
    try:
        return dict(spec.custom_qk)[int(k)]
    except KeyError:
        raise MissingMode(f"custom noise has no q_k for mode k={k}") from None


def qk_array(spec: NoiseSpec, modes: np.ndarray) -> np.ndarray:
    """Vectorised :func:`qk_value` over an integer mode array."""
    modes = np.asarray(modes)
    if spec.kind is NoiseKind.WHITE:
        return np.ones(modes.shape)
    if spec.kind is NoiseKind.REGULAR:
        ak = np.abs(modes).astype(float)
        out = np.ones(modes.shape)
        nz = ak > 0
        out[nz] = ak[nz] ** (-1.0 - 2.0 * spec.epsilon)
        return out
    table = dict(spec.custom_qk)
    try:
        return np.array([table[int(k)] for k in modes.ravel()], dtype=float).reshape(modes.shape)
    except KeyError as exc:
        raise MissingMode(f"custom noise has no q_k for mode k={exc.args[0]}") from None


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    N: int = 64
    dt: float = 2.0**-12
    seed: int = 0
    method: Method = Method.ESM
    record_every: int = 1
    dealias: bool = False
    init_kind: str = "zero"
    init_k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        _require(int(self.N) == self.N and self.N >= 1, "run.N", "must be a positive integer", self.N)
        _require(math.isfinite(self.dt) and self.dt > 0, "run.dt", "must be > 0", self.dt)
        _require(self.dt < 1, "run.dt", "must be < 1", self.dt)
        _require(0 <= int(self.seed) < 2**64, "run.seed", "must be an unsigned 64-bit integer", self.seed)
        _require(int(self.record_every) >= 1, "run.record_every", "must be a positive integer", self.record_every)
        _require(self.init_kind in ("zero", "plane_wave"), "init.kind", "must be zero or plane_wave", self.init_kind)
        ratio = self.model.T / self.dt
        _require(
            abs(ratio - round(ratio)) <= M_TOLERANCE * max(1.0, ratio),
            "run.dt",
            f"must divide model.T into a whole number of steps (T/dt = {ratio!r})",
            self.dt,
        )

    @property
    def M(self) -> int:
        """Number of time steps."""
        return int(round(self.model.T / self.dt))

    @property
    def nu_in_theory_range(self) -> bool:
        return self.model.nu_in_theory_range

    def refined(self, space: int = 2, time: int = 4) -> "RunConfig":
        return replace(self, N=self.N * space, dt=self.dt / time)

    def to_flat(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "model.R": self.model.R,
            "model.mu": self.model.mu,
            "model.nu": self.model.nu,
            "model.sigma": self.model.sigma,
            "model.T": self.model.T,
            "noise.kind": self.noise.kind.value,
            "noise.r": self.noise.r,
            "noise.epsilon": self.noise.epsilon,
            "run.N": self.N,
            "run.dt": self.dt,
            "run.seed": int(self.seed),
            "run.method": self.method.value,
            "run.record_every": self.record_every,
            "run.dealias": self.dealias,
            "init.kind": self.init_kind,
            "init.k": self.init_k,
        }
        for k, q in self.noise.custom_qk or ():
            out[f"noise.q.{k}"] = q
        return out


def _require(ok: bool, key: str, bound: str, value) -> None:
    if not ok:
        raise ValidationError(f"{key} {bound} (got {value!r})")


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.BitXor: operator.pow,  # "2^-12" reads as a power
}


def _eval_number(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_number(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        left, right = _eval_number(node.left), _eval_number(node.right)
        if isinstance(node.op, (ast.Pow, ast.BitXor)):
            return float(left) ** right if right < 0 else left**right
        return _BINOPS[type(node.op)](left, right)
    raise ValueError("not a number")


def parse_number(text: str) -> float | int:
    text = text.strip()
    try:
        return _eval_number(ast.parse(text.replace("^", "**"), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ParseError(f"cannot parse number {text!r}") from exc


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ParseError(f"cannot parse boolean {text!r}")


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ParseError(f"line {lineno}: empty key or value in {raw!r}")
        out[key] = value.strip("'\"")
    return out


def parse_overrides(pairs: Iterable[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for p in pairs:
        if "=" not in p:
            raise ParseError(f"override {p!r} is not key=value")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


_KNOWN = {
    "model.R", "model.mu", "model.nu", "model.sigma", "model.T",
    "noise.kind", "noise.r", "noise.epsilon",
    "run.N", "run.dt", "run.seed", "run.method", "run.record_every", "run.dealias",
    "init.kind", "init.k",
}


def config_from_flat(flat: Mapping[str, Any]) -> RunConfig:
    """Build a validated :class:`RunConfig` from flat key/value pairs (strings or numbers)."""
    flat = dict(flat)
    unknown = [k for k in flat if k not in _KNOWN and not k.startswith("noise.q.")]
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def num(key, default, cast=float):
        if key not in flat:
            return default
        v = flat[key]
        v = parse_number(v) if isinstance(v, str) else v
        if cast is int:
            if float(v) != int(v):
                raise ValidationError(f"{key} must be an integer (got {v!r})")
            return int(v)
        return float(v)

    custom = {}
    for k, v in flat.items():
        if k.startswith("noise.q."):
            try:
                mode = int(k[len("noise.q."):])
            except ValueError:
                raise ParseError(f"bad mode in key {k!r}") from None
            custom[mode] = float(parse_number(v) if isinstance(v, str) else v)

    d_model, d_noise, d_run = ModelParams(), NoiseSpec(), RunConfig()
    try:
        kind = NoiseKind(str(flat.get("noise.kind", d_noise.kind.value)).lower())
        method = Method(str(flat.get("run.method", d_run.method.value)).lower())
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    model = ModelParams(
        R=num("model.R", d_model.R),
        mu=num("model.mu", d_model.mu),
        nu=num("model.nu", d_model.nu),
        sigma=num("model.sigma", d_model.sigma),
        T=num("model.T", d_model.T),
    )
    noise = NoiseSpec(
        kind=kind,
        r=num("noise.r", -0.5 if kind is NoiseKind.WHITE else 0.0),
        epsilon=num("noise.epsilon", d_noise.epsilon),
        custom_qk=custom or None,
    )
    dealias = flat.get("run.dealias", d_run.dealias)
    return RunConfig(
        model=model,
        noise=noise,
        N=num("run.N", d_run.N, int),
        dt=num("run.dt", d_run.dt),
        seed=num("run.seed", d_run.seed, int),
        method=method,
        record_every=num("run.record_every", d_run.record_every, int),
        dealias=_parse_bool(dealias) if isinstance(dealias, str) else bool(dealias),
        init_kind=str(flat.get("init.kind", d_run.init_kind)),
        init_k=num("init.k", d_run.init_k, int),
    )


def read_config_file(path: str | os.PathLike) -> dict[str, Any]:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        if not isinstance(data, dict) or any(isinstance(v, (dict, list)) for v in data.values()):
            raise ParseError(f"{path}: expected a flat JSON object")
        return data
    return parse_kv_text(text)


def load_config(
    path: str | os.PathLike | None = None,
    overrides: Iterable[str] | Mapping[str, Any] = (),
    *,
    env: Mapping[str, str] | None = None,
) -> RunConfig:
    """Load, merge and validate a run configuration.

    Precedence, lowest first: built-in defaults, the file at ``path``, the
    ``SCGLE_SEED`` environment variable, explicit ``overrides``.
    """
    flat: dict[str, Any] = {}
    if path is not None:
        flat.update(read_config_file(path))
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        flat["run.seed"] = env[SEED_ENV]
    flat.update(overrides if isinstance(overrides, Mapping) else parse_overrides(overrides))
    return config_from_flat(flat)
