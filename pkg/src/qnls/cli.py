"""Command-line driver: ``qnls {run,sweep,rays,groundstate,transform-check,scatter}``.

Exit status of ``run``: 0 completed, 2 blow-up detected, 3 resolution
exhausted.  Configuration or I/O problems exit with 1.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import runner
from .config import ConfigError, RunConfig, load_config
from .grid import ChirpedGaussian, l2_norm, make_grid, sample_gaussian
from .groundstate import MerleParams, merle_exact_v, merle_initial_data, solve_q
from .propagators import NonlinearitySpec, PotentialSpec, kinetic_step, mehler_quadrature_oracle, ray_focus_time
from .snapshot import SnapshotError, snapshot_write
from .solver import SolverConfig, evolve
from .transforms import (
    evolve_lens_frame,
    j_norm_identity_check,
    lens_confining,
    lens_repulsive,
    matched_time,
    scattering_monitor,
)

logger = logging.getLogger("qnls")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(runner.EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _optional_config(args) -> RunConfig | None:
    return load_config(args.config) if args.config else None


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if cfg.axes:
        raise ConfigError("config declares sweep axes; use the 'sweep' command")
    code, out = runner.run_config(cfg, Path(args.out))
    print(f"{out.status} t={out.t_stop:.10g} steps={out.steps}")
    return code


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if not cfg.axes:
        raise ConfigError("no sweep axes declared (sweep.<parameter> = v1, v2, ...)")
    rows = runner.sweep_config(cfg, Path(args.out), jobs=args.jobs)
    for r in rows:
        desc = ", ".join(f"{k}={v:g}" for k, v in r["overrides"].items())
        est = "" if r["blowup_T"] is None else f" T_fit={r['blowup_T']:.6g}"
        print(f"{desc}: {r['status']} t={r['t_stop']:.6g}{est}")
    return 0


def cmd_rays(args) -> int:
    cfg = _optional_config(args)
    if cfg is None:
        kind, omega, chirp, offset = "free", 0.0, -2.0, None
        x0s, t_end, samples = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0), 1.0, 201
    else:
        kind = cfg["potential.kind"]
        omega = cfg["potential.omega"] or 0.0
        chirp, offset = cfg["rays.chirp"], cfg["rays.offset"]
        x0s, t_end, samples = cfg["rays.x0"], cfg["rays.t_end"], cfg["rays.samples"]
    t, cols = runner.ray_table(kind, omega, chirp, offset, x0s, t_end, samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["t"] + [f"x0={runner.fmt(x0)}" for x0 in x0s]
    runner.write_csv(out / "rays.csv", header, zip(t, *cols))
    focus = ray_focus_time(kind, omega=omega, chirp=chirp, offset=offset)
    print(f"rays: {len(x0s)} trajectories, focus time {'none' if focus is None else f'{focus:.17g}'}")
    return 0


def cmd_groundstate(args) -> int:
    Q = solve_q(args.n, args.lam)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runner.write_csv(out / "q_profile.csv", ("r", "q", "dq"), zip(Q.r, Q.q, Q.dq))
    m = args.m or (1024 if args.n == 1 else 256)
    grid = make_grid(args.n, m, args.L)
    snapshot_write(grid.field(Q(np.sqrt(grid.r2))), 0.0, out / "q.nlsq")
    print(f"Q(0)={Q.q0:.15g} mass={Q.mass:.15g} residual={Q.residual():.3e}")
    return 0


def transform_suite(seed: int = 0, m: int = 1024, L: float = 16.0, tol: float = 1e-3) -> list[tuple[str, float, bool]]:
    """Lens coherence checks on critical Merle data and a random linear Gaussian."""
    rng = np.random.default_rng(seed)
    grid = make_grid(1, m, L)
    Q = solve_q(1, -1.0)
    nl = NonlinearitySpec(-1.0, 2.0)
    T, omega = 1.0, 0.5
    v0 = merle_initial_data(grid, Q, MerleParams(T=T))
    dt = 1e-3
    results = []
    t_check = (0.25, 0.5)
    u_run = evolve(v0, PotentialSpec("repulsive", omega), nl, SolverConfig(dt, max(t_check), record_every=50),
                   keep_fields=t_check)
    taus = tuple(matched_time(t, omega) for t in t_check)
    v_run = evolve(v0, PotentialSpec(), nl, SolverConfig(1e-4, max(taus), record_every=10))
    for t, tau in zip(t_check, taus):
        v_tau = evolve(v0, PotentialSpec(), nl, SolverConfig(1e-4, tau)).final
        lensed = lens_repulsive(v_tau, t, omega)
        err = l2_norm(lensed - u_run.fields[t]) / l2_norm(lensed)
        results.append((f"lens coherence t={t:g}", err, err < tol))
        exact = lens_repulsive(merle_exact_v(grid, Q, MerleParams(T=T), tau), t, omega)
        err = l2_norm(exact - u_run.fields[t]) / l2_norm(exact)
        results.append((f"lens of exact solution t={t:g}", err, err < tol))
        gap = j_norm_identity_check(v_run, u_run.fields[t], omega, t)
        results.append((f"J-norm identity t={t:g}", gap, gap < tol))
    # linear confining lens against the literal kernel
    g = ChirpedGaussian(1.0, float(rng.uniform(0.8, 1.2)), float(rng.uniform(-1, 1)), float(rng.uniform(-0.5, 0.5)))
    f = sample_gaussian(grid, g)
    for t in (0.3, 0.6):
        lensed = lens_confining(kinetic_step(f, matched_time(t, 1.0, "confining")), t, 1.0)
        err = l2_norm(lensed - mehler_quadrature_oracle(f, t, 1.0, "confining"))
        results.append((f"confining lens t={t:g}", err, err < 1e-4))
    return results


def cmd_transform_check(args) -> int:
    ok = True
    for name, value, passed in transform_suite(seed=args.seed):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e}")
        ok &= passed
    return 0 if ok else 1


def cmd_scatter(args) -> int:
    cfg = _optional_config(args)
    if cfg is None:
        grid = make_grid(1, 1024, 16.0)
        omega, nl, dt = 1.0, NonlinearitySpec(1.0, 1.0), 1e-3
        times = (2.0, 4.0, 8.0)
        u0 = sample_gaussian(grid, ChirpedGaussian())
    else:
        grid, pot, nl = runner.build_problem(cfg)
        if pot.kind != "repulsive":
            raise ConfigError("scattering needs potential.kind = repulsive", "potential.kind")
        omega, dt, times = pot.omega, cfg["solver.dt0"], cfg["scatter.times"]
        u0, _ = runner.initial_state(cfg, grid)
    run = evolve_lens_frame(u0, omega, nl, dt, max(times), sample_times=times)
    trace = scattering_monitor(run, omega, times)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(a, b, d) for a, b, d in zip(trace.times, trace.times[1:], trace.distances)]
    runner.write_csv(out / "scatter.csv", ("t_from", "t_to", "sigma_distance"), rows)
    for a, b, d in rows:
        print(f"d({a:g} -> {b:g}) = {d:.6e}")
    print("decreasing" if trace.is_decreasing() else "not decreasing")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qnls", description="Spectral NLS simulator with quadratic potentials.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required=False):
        sp.add_argument("--config", required=config_required, help="configuration file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="concurrent runs")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized checks")

    common(sub.add_parser("run", help="single evolution"), config_required=True)
    common(sub.add_parser("sweep", help="parameter sweep over up to two axes"), config_required=True)
    common(sub.add_parser("rays", help="classical ray fan as CSV"))
    gs = sub.add_parser("groundstate", help="export the ground state profile")
    common(gs)
    gs.add_argument("--n", type=int, default=1, choices=(1, 2))
    gs.add_argument("--lambda", dest="lam", type=float, default=-1.0)
    gs.add_argument("--m", type=int, default=None)
    gs.add_argument("--L", type=float, default=16.0)
    common(sub.add_parser("transform-check", help="lens-transform coherence suite"))
    common(sub.add_parser("scatter", help="scattering-state Cauchy monitor"))
    return p


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "rays": cmd_rays,
    "groundstate": cmd_groundstate,
    "transform-check": cmd_transform_check,
    "scatter": cmd_scatter,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("qnls: error: --jobs must be >= 1", file=sys.stderr)
        return runner.EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SnapshotError, OSError) as exc:
        print(f"qnls: error: {exc}", file=sys.stderr)
        return runner.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
