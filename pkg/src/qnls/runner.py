"""Turn a :class:`~qnls.config.RunConfig` into runs, CSV files and snapshots."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .grid import ChirpedGaussian, Field, make_grid, sample_gaussian
from .groundstate import MerleParams, merle_initial_data, solve_q
from .observables import CSV_COLUMNS
from .propagators import NonlinearitySpec, PotentialSpec
from .snapshot import snapshot_read, snapshot_write
from .solver import BLOWUP, COMPLETED, EXHAUSTED, RunOutcome, SolverConfig, evolve

logger = logging.getLogger(__name__)

EXIT_CODES = {COMPLETED: 0, BLOWUP: 2, EXHAUSTED: 3}
EXIT_ERROR = 1


def fmt(x) -> str:
    """Fixed 17-significant-digit float format used in every CSV."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return "%.17g" % x


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_records(path: Path, series) -> None:
    write_csv(path, CSV_COLUMNS, (r.as_row() for r in series))


@lru_cache(maxsize=8)
def _ground_state(n: int, lam: float):
    return solve_q(n, lam)


def build_problem(cfg: RunConfig):
    """``(grid, potential, nonlinearity)`` from a validated configuration."""
    grid = make_grid(cfg["grid.n"], cfg["grid.m"], cfg["grid.L"])
    kind = cfg["potential.kind"]
    pot = PotentialSpec(kind, cfg["potential.omega"] if kind != "free" else 0.0)
    nl = NonlinearitySpec(cfg["nl.lambda"], cfg["nl.sigma"])
    return grid, pot, nl


def initial_state(cfg: RunConfig, grid) -> tuple[Field, float]:
    kind = cfg["init.kind"]
    n = grid.n
    if kind == "gaussian":
        center = cfg["init.center"]
        center = center * n if len(center) == 1 else center
        g = ChirpedGaussian(cfg["init.amplitude"], cfg["init.width"], tuple(center), cfg["init.chirp"])
        return sample_gaussian(grid, g), 0.0
    if kind == "merle":
        lam = cfg["nl.lambda"] if cfg["nl.lambda"] < 0 else -1.0
        Q = _ground_state(n, lam)

        def vec(key):
            v = cfg[key]
            return tuple(v * n) if len(v) == 1 else tuple(v)

        p = MerleParams(cfg["init.T"], cfg["init.delta"], cfg["init.theta"], vec("init.x0"), vec("init.x1"))
        f = merle_initial_data(grid, Q, p)
        return f * cfg["init.scale"], 0.0
    f, t0 = snapshot_read(cfg.resolve(cfg["init.path"]))
    if (f.grid.n, f.grid.m, f.grid.L) != (grid.n, grid.m, grid.L):
        raise ConfigError(
            f"snapshot grid (n={f.grid.n}, m={f.grid.m}, L={f.grid.L:g}) differs from the configured grid",
            "init.path",
        )
    return f, t0


def run_config(cfg: RunConfig, out_dir: Path) -> tuple[int, RunOutcome]:
    """Evolve, write CSV, final and checkpoint snapshots; return ``(exit code, outcome)``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid, pot, nl = build_problem(cfg)
    u0, t0 = initial_state(cfg, grid)
    horizon = cfg["solver.t_end"] - t0
    if horizon == 0:
        raise ConfigError("run starts at its end time", "solver.t_end")
    scfg = SolverConfig(
        dt0=cfg["solver.dt0"],
        t_end=horizon,
        record_every=cfg["solver.record_every"],
        adapt=cfg["solver.adapt"],
        grad_ceiling=cfg["solver.grad_ceiling"],
        resolution_guard=cfg["solver.resolution_guard"],
        max_steps=cfg["solver.max_steps"],
    )
    checkpoints = cfg["output.checkpoints"]
    if checkpoints and scfg.adapt:
        raise ConfigError("checkpoints need a fixed step (solver.adapt = false)", "output.checkpoints")
    rel = []
    for tc in checkpoints:
        r = tc - t0
        k = round(abs(r) / scfg.dt0)
        if r * horizon < 0 or abs(r) > abs(horizon) or abs(k * scfg.dt0 - abs(r)) > 1e-9 * max(1.0, abs(r)):
            raise ConfigError(f"checkpoint t={tc:g} is not a step time inside the run", "output.checkpoints")
        rel.append(r)
    out = evolve(u0, pot, nl, scfg, t0=t0, keep_fields=tuple(rel))
    write_records(out_dir / cfg["output.csv"], out.series)
    snapshot_write(out.final, out.t_stop, out_dir / cfg["output.snapshot"])
    for r, f in out.fields.items():
        snapshot_write(f, t0 + r, out_dir / f"checkpoint_t{t0 + r:.6g}.nlsq")
    logger.info("run finished: %s at t=%.6g after %d steps", out.status, out.t_stop, out.steps)
    return EXIT_CODES[out.status], out


def _sweep_worker(args):
    cfg, overrides, out_dir = args
    sub = cfg.with_overrides(overrides)
    code, out = run_config(sub, out_dir)
    est = out.blowup
    return {
        "overrides": overrides,
        "status": out.status,
        "exit_code": code,
        "t_stop": out.t_stop,
        "blowup_T": est.T if est else None,
        "fit_residual": est.residual if est else None,
        "steps": out.steps,
    }


SUMMARY_COLUMNS = ("status", "exit_code", "t_stop", "blowup_T", "fit_residual", "steps")


def sweep_config(cfg: RunConfig, out_dir: Path, jobs: int | None = None) -> list[dict]:
    """Run every sweep point concurrently and write ``summary.csv`` sorted by the axes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = cfg.sweep_points()
    names = [a for a, _ in cfg.axes]
    tasks = []
    for i, ov in enumerate(points):
        tag = "_".join(f"{k.split('.')[-1]}{fmt(v)}" for k, v in ov.items()) or "base"
        tasks.append((cfg, ov, out_dir / f"run{i:03d}_{tag}"))
    if jobs == 1 or len(tasks) == 1:
        rows = [_sweep_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    rows.sort(key=lambda r: tuple(r["overrides"][k] for k in names))
    table = [[r["overrides"][k] for k in names] + [r[c] for c in SUMMARY_COLUMNS] for r in rows]
    write_csv(out_dir / "summary.csv", list(names) + list(SUMMARY_COLUMNS), table)
    return rows


def ray_table(kind: str, omega: float, chirp: float, offset, x0s, t_end: float, samples: int):
    """Columns ``t`` and one ray per ``x0``."""
    from .propagators import classical_ray

    t = np.linspace(0.0, t_end, samples)
    cols = [classical_ray(kind, x0, t, omega=omega, chirp=chirp, offset=offset) for x0 in x0s]
    return t, cols

