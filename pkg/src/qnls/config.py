"""Line-oriented run configuration: ``section.key = value``.

Blank lines and ``#`` comments are ignored.  Every key must appear in
:data:`SCHEMA`; unknown or repeated keys are errors.  Sweep axes are written as
``sweep.<section>.<key> = v1, v2, ...`` and ``sweep.max_runs`` caps their
product.

Minimal example (free Gaussian)::

    grid.n = 1
    grid.m = 1024
    grid.L = 16
    nl.lambda = 0
    nl.sigma = 1
    solver.dt0 = 1e-3
    solver.t_end = 1
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

REQUIRED = object()


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


def _opt_float(text: str):
    return None if text.strip().lower() in ("none", "") else float(text)


def _str(text: str) -> str:
    return text.strip()


# key -> (parser, default)
SCHEMA: dict[str, tuple[Any, Any]] = {
    "grid.n": (int, REQUIRED),
    "grid.m": (int, REQUIRED),
    "grid.L": (float, REQUIRED),
    "potential.kind": (_str, "free"),
    "potential.omega": (float, None),
    "nl.lambda": (float, REQUIRED),
    "nl.sigma": (float, REQUIRED),
    "solver.dt0": (float, REQUIRED),
    "solver.t_end": (float, REQUIRED),
    "solver.record_every": (int, 10),
    "solver.adapt": (_bool, False),
    "solver.grad_ceiling": (_opt_float, None),
    "solver.resolution_guard": (_opt_float, None),
    "solver.max_steps": (int, 5_000_000),
    "init.kind": (_str, "gaussian"),
    "init.amplitude": (float, 1.0),
    "init.width": (float, 1.0),
    "init.center": (_floats, (0.0,)),
    "init.chirp": (float, 0.0),
    "init.T": (float, 1.0),
    "init.delta": (float, 1.0),
    "init.theta": (float, 0.0),
    "init.x0": (_floats, (0.0,)),
    "init.x1": (_floats, (0.0,)),
    "init.scale": (float, 1.0),
    "init.path": (_str, None),
    "output.csv": (_str, "observables.csv"),
    "output.snapshot": (_str, "final.nlsq"),
    "output.checkpoints": (_floats, ()),
    "rays.chirp": (float, 0.0),
    "rays.offset": (_opt_float, None),
    "rays.x0": (_floats, (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)),
    "rays.t_end": (float, 2.0),
    "rays.samples": (int, 201),
    "scatter.times": (_floats, (2.0, 4.0, 8.0)),
}

SWEEPABLE = {k for k, (p, _) in SCHEMA.items() if p in (int, float, _opt_float)}
INIT_KINDS = ("gaussian", "merle", "snapshot")
MAX_AXES = 2


class ConfigError(ValueError):
    """Configuration problem, tagged with the offending key and line when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(key)
        if line is not None:
            where.append(f"line {line}")
        loc = ", ".join(where)
        super().__init__(f"{loc}: {message}" if loc else message)


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)
    axes: tuple[tuple[str, tuple[float, ...]], ...] = ()
    max_runs: int = 64
    base_dir: Path = Path(".")

    def __getitem__(self, key: str):
        return self.values[key]

    def with_overrides(self, overrides: dict) -> "RunConfig":
        vals = dict(self.values)
        vals.update(overrides)
        cfg = replace(self, values=vals, axes=())
        _validate(cfg, {})
        return cfg

    def sweep_points(self) -> list[dict]:
        if not self.axes:
            return [{}]
        names = [a for a, _ in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.axes))]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    raw: dict[str, Any] = {}
    lines: dict[str, int] = {}
    axes: list[tuple[str, tuple[float, ...]]] = []
    max_runs = 64
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if key in lines:
            raise ConfigError(f"repeated key (first on line {lines[key]})", key, lineno)
        lines[key] = lineno
        if key == "sweep.max_runs":
            max_runs = _parse_value(int, value, key, lineno)
            continue
        if key.startswith("sweep."):
            target = key[len("sweep."):]
            if target not in SCHEMA:
                raise ConfigError(f"unknown sweep parameter {target!r}", key, lineno)
            if target not in SWEEPABLE:
                raise ConfigError("only numeric parameters can be swept", key, lineno)
            vals = tuple(_parse_value(SCHEMA[target][0], v, key, lineno) for v in value.split(","))
            if not vals:
                raise ConfigError("sweep axis has no values", key, lineno)
            axes.append((target, vals))
            continue
        if key not in SCHEMA:
            raise ConfigError("unknown key", key, lineno)
        raw[key] = _parse_value(SCHEMA[key][0], value, key, lineno)

    values = {}
    for key, (_, default) in SCHEMA.items():
        if key in raw:
            values[key] = raw[key]
        elif default is REQUIRED:
            raise ConfigError("required key missing", key)
        else:
            values[key] = default
    cfg = RunConfig(values=values, axes=tuple(axes), max_runs=max_runs, base_dir=Path(base_dir))
    _validate(cfg, lines)
    for name, vals in cfg.axes:
        for v in vals:
            try:
                cfg.with_overrides({name: v})
            except ConfigError as exc:
                raise ConfigError(f"sweep value {v!r} invalid: {exc}", "sweep." + name, lines.get("sweep." + name)) from None
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _parse_value(parser, text: str, key: str, line: int):
    try:
        return parser(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc}", key, line) from None


def _validate(cfg: RunConfig, lines: dict[str, int]) -> None:
    v = cfg.values

    def fail(key, msg):
        raise ConfigError(msg, key, lines.get(key))

    n, m, L = v["grid.n"], v["grid.m"], v["grid.L"]
    if n not in (1, 2, 3):
        fail("grid.n", f"dimension must be 1, 2 or 3, got {n}")
    if m < 16 or m & (m - 1):
        fail("grid.m", f"must be a power of two >= 16, got {m}")
    if not L > 0:
        fail("grid.L", "must be positive")
    kind = v["potential.kind"]
    if kind not in ("free", "confining", "repulsive"):
        fail("potential.kind", f"unknown potential {kind!r}")
    if kind != "free":
        w = v["potential.omega"]
        if w is None:
            fail("potential.omega", f"required for potential.kind = {kind}")
        if not w > 0:
            fail("potential.omega", "must be positive")
    sigma = v["nl.sigma"]
    if not sigma > 0:
        fail("nl.sigma", "must be positive")
    if n >= 3 and not sigma < 2.0 / (n - 2):
        fail("nl.sigma", f"sigma = {sigma:g} violates the bound sigma < 2/(n-2) = {2.0 / (n - 2):g} for n = {n}")
    if not v["solver.dt0"] > 0:
        fail("solver.dt0", "must be positive")
    if v["solver.t_end"] == 0:
        fail("solver.t_end", "must be non-zero")
    if v["solver.record_every"] < 1:
        fail("solver.record_every", "must be >= 1")
    for key in ("solver.grad_ceiling", "solver.resolution_guard"):
        if v[key] is not None and not v[key] > 0:
            fail(key, "must be positive")
    ik = v["init.kind"]
    if ik not in INIT_KINDS:
        fail("init.kind", f"must be one of {INIT_KINDS}")
    if ik == "gaussian":
        if not v["init.amplitude"] > 0:
            fail("init.amplitude", "must be positive")
        if not v["init.width"] > 0:
            fail("init.width", "must be positive")
        if len(v["init.center"]) not in (1, n):
            fail("init.center", f"needs 1 or {n} components")
    if ik == "merle":
        if n not in (1, 2):
            fail("init.kind", "merle data is available for n = 1, 2")
        for key in ("init.T", "init.delta", "init.scale"):
            if not v[key] > 0:
                fail(key, "must be positive")
    if ik == "snapshot":
        path = v["init.path"]
        if not path:
            fail("init.path", "required for init.kind = snapshot")
        if not cfg.resolve(path).is_file():
            fail("init.path", f"file not found: {path}")
    if len(cfg.axes) > MAX_AXES:
        raise ConfigError(f"at most {MAX_AXES} sweep axes are supported")
    if cfg.max_runs < 1:
        fail("sweep.max_runs", "must be >= 1")
    total = math.prod(len(vals) for _, vals in cfg.axes) if cfg.axes else 1
    if total > cfg.max_runs:
        raise ConfigError(f"sweep has {total} runs, cap is {cfg.max_runs}", "sweep.max_runs", lines.get("sweep.max_runs"))
