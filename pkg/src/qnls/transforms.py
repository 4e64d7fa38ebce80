"""Lens transforms, the J-norm identity and scattering-state extraction.

With ``tau = tanh(omega t)/omega`` the repulsive lens

    u(t, x) = cosh(wt)^{-n/2} e^{i w |x|^2 tanh(wt)/2} v(tau, x / cosh(wt))

maps solutions of the free equation with coupling ``lam cosh(wt)^{2 - n sigma}``
(in ``tau``) onto solutions of the repulsive equation with coupling ``lam``.
At the critical power ``sigma = 2/n`` the coupling is constant.  The confining
lens is the same with ``tan``/``cos`` and the opposite chirp.

:func:`evolve_lens_frame` integrates the repulsive equation in the lens frame.
This keeps an expanding solution on a fixed box for arbitrarily long times and
gives the scattering state ``U_omega(-t) u(t) = U_0(-tau) v(tau)`` directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import Field, gradient_norm, resample, sigma_norm
from .observables import ObservableRecord, j_norm, momentum, nonlinear_integral, observe
from .propagators import (
    CONFINING_MARGIN,
    NonlinearitySpec,
    PotentialSpec,
    kinetic_step,
    mehler_repulsive,
)
from .solver import BLOWUP, COMPLETED, RunOutcome

logger = logging.getLogger(__name__)


def _lens_factors(kind: str, t: float, omega: float) -> tuple[float, float, float]:
    """(matched free time, dilation, outgoing chirp)."""
    wt = omega * t
    if kind == "repulsive":
        return math.tanh(wt) / omega, math.cosh(wt), omega * math.tanh(wt)
    if kind == "confining":
        if not abs(wt) < math.pi / 2 - CONFINING_MARGIN:
            raise ValueError(f"confining lens needs |t| < pi/(2 omega), got t={t}")
        return math.tan(wt) / omega, math.cos(wt), -omega * math.tan(wt)
    raise ValueError(f"unknown lens kind {kind!r}")


def matched_time(t: float, omega: float, kind: str = "repulsive") -> float:
    """Free-equation time paired with ``t``: ``tanh(wt)/w`` or ``tan(wt)/w``."""
    return _lens_factors(kind, t, omega)[0]


def _lens(v: Field, t: float, omega: float, kind: str) -> Field:
    if not omega > 0:
        raise ValueError("omega must be positive")
    if t == 0:
        return v.like(v.values)
    _, scale, chirp = _lens_factors(kind, t, omega)
    grid = v.grid
    w = resample(v, scale)
    return v.like(scale ** (-grid.n / 2) * np.exp(0.5j * chirp * grid.r2) * w.values)


def lens_repulsive(v: Field, t: float, omega: float) -> Field:
    """Repulsive-equation state at ``t`` from the free state ``v`` at ``tanh(wt)/w``.

    The caller passes ``v`` already evaluated at the matched time.
    """
    return _lens(v, t, omega, "repulsive")


def lens_confining(v: Field, t: float, omega: float) -> Field:
    """Confining-equation state at ``t`` from the free state ``v`` at ``tan(wt)/w``."""
    return _lens(v, t, omega, "confining")


def inverse_lens(u: Field, t: float, omega: float, kind: str = "repulsive") -> Field:
    """Undo :func:`lens_repulsive` / :func:`lens_confining` (chirp, dilation, amplitude)."""
    if t == 0:
        return u.like(u.values)
    _, scale, chirp = _lens_factors(kind, t, omega)
    grid = u.grid
    dechirped = u.like(scale ** (grid.n / 2) * np.exp(-0.5j * chirp * grid.r2) * u.values)
    return resample(dechirped, 1.0 / scale)


def _grad_interpolant(run: RunOutcome):
    t = np.array([r.t for r in run.series])
    g = np.array([r.grad_norm for r in run.series])
    if np.any(np.diff(t) <= 0):
        raise ValueError("run times must increase")
    return t, CubicSpline(t, g)


def j_norm_identity_check(v_run: RunOutcome, u, omega: float, t: float) -> float:
    """Relative gap between ``||J(t) u(t)||`` and ``||grad v(tanh(wt)/w)||``.

    ``v_run`` is a forward run of the free equation; ``||grad v||`` is
    interpolated from its records.  ``u`` is the repulsive state at ``t``
    (a :class:`Field`) or a repulsive run holding a record at ``t``.
    """
    tau = matched_time(t, omega) if t != 0 else 0.0
    times, spline = _grad_interpolant(v_run)
    if not times[0] - 1e-12 <= tau <= times[-1] + 1e-12:
        raise ValueError(f"matched time {tau:g} outside recorded range [{times[0]:g}, {times[-1]:g}]")
    gv = float(spline(tau))
    if isinstance(u, Field):
        ju = j_norm(u, t, PotentialSpec("repulsive", omega))
    else:
        recs = [r for r in u.series if abs(r.t - t) <= 1e-12 * max(1.0, abs(t))]
        if not recs:
            raise ValueError(f"run has no record at t={t}")
        ju = recs[0].j_norm
    return abs(ju - gv) / gv


def lens_frame_energy(v: Field, t: float, omega: float, nl: NonlinearitySpec) -> float:
    """Repulsive-equation energy of ``u(t) = lens_repulsive(v, t, omega)``, evaluated on ``v``.

    With ``c = cosh(wt)``::

        E = -w^2 ||y v||^2 / 2 + ||grad v||^2 / (2 c^2) + w tanh(wt) p(v)
            + lam c^{-n sigma} ||v||^{2 sigma + 2} / (sigma + 1)

    so ``u`` never has to be sampled on a box wide enough to hold it.
    """
    c = math.cosh(omega * t)
    grid = v.grid
    yv2 = float(np.sum(grid.r2 * np.abs(v.values) ** 2) * grid.cell)
    e = -0.5 * omega**2 * yv2 + 0.5 * gradient_norm(v) ** 2 / c**2 + omega * math.tanh(omega * t) * momentum(v)
    if nl.lam != 0.0:
        e += nl.lam / (nl.sigma + 1) * c ** (-grid.n * nl.sigma) * nonlinear_integral(v, nl.sigma)
    return e


def scattering_extract(u: Field, t: float, omega: float) -> Field:
    """``U_omega(-t) u``: pull a repulsive-equation state at ``t`` back to ``t = 0``."""
    if t == 0:
        raise ValueError("extraction time must be non-zero")
    return mehler_repulsive(u, -t, omega)


@dataclass
class LensFrameRun:
    """Repulsive run carried out in the lens frame.

    ``states`` maps sample times ``t`` to ``U_omega(-t) u(t)`` and ``records``
    holds observables of the lens-frame field ``v`` (its own ``t`` column is
    the repulsive time).  ``energies`` pairs each record time with the
    repulsive-equation energy of ``u`` (see :func:`lens_frame_energy`).
    """

    status: str
    t_stop: float
    omega: float
    nl: NonlinearitySpec
    final_v: Field
    states: dict[float, Field] = field(default_factory=dict)
    records: list[ObservableRecord] = field(default_factory=list)
    energies: list[tuple[float, float]] = field(default_factory=list)
    steps: int = 0


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def _coupling_integral(t0: float, t1: float, omega: float, power: float) -> float:
    """``int_{t0}^{t1} cosh(omega s)^{-power} ds`` by 4-point Gauss-Legendre."""
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    s = mid + half * _GAUSS_X
    return float(half * np.sum(_GAUSS_W * np.cosh(omega * s) ** (-power)))


def evolve_lens_frame(
    u0: Field,
    omega: float,
    nl: NonlinearitySpec,
    dt: float,
    t_end: float,
    sample_times=(),
    record_every: int = 0,
    grad_ceiling: float | None = None,
) -> LensFrameRun:
    """Integrate the repulsive equation forward to ``t_end`` in the lens frame.

    One Strang step in ``t`` is: nonlinear phase over ``[t, t + dt/2]`` with
    coefficient ``lam cosh(ws)^{-n sigma}``, free flow for
    ``tau(t + dt) - tau(t)``, nonlinear phase over ``[t + dt/2, t + dt]``.
    Since ``|v|`` is invariant under the phase flow the time-dependent phase
    is integrated exactly up to quadrature.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if not (dt > 0 and t_end > 0):
        raise ValueError("dt and t_end must be positive")
    grid = u0.grid
    nl.check_dimension(grid.n)
    n_steps = max(1, round(t_end / dt))
    h = t_end / n_steps
    wanted = {}
    for ts in sample_times:
        k = round(ts / h)
        if abs(k * h - ts) > 1e-9 * max(1.0, ts) or not 0 < k <= n_steps:
            raise ValueError(f"sample time {ts} is not on the step lattice (h={h:g})")
        wanted[k] = ts
    power = grid.n * nl.sigma
    free = PotentialSpec()
    v = np.array(u0.values)
    xi2 = grid.xi2
    states: dict[float, Field] = {}
    records = []
    energies = []
    status = COMPLETED
    if record_every:
        records.append(observe(u0, 0.0, free, nl))
        energies.append((0.0, lens_frame_energy(u0, 0.0, omega, nl)))
    k = 0
    t = 0.0
    for k in range(1, n_steps + 1):
        t_prev, t = (k - 1) * h, k * h
        t_mid = 0.5 * (t_prev + t)
        if nl.lam != 0.0:
            c1 = nl.lam * _coupling_integral(t_prev, t_mid, omega, power)
            v = v * np.exp(-1j * c1 * np.abs(v) ** (2 * nl.sigma))
        dtau = (math.tanh(omega * t) - math.tanh(omega * t_prev)) / omega
        v = np.fft.ifftn(np.fft.fftn(v) * np.exp(-0.5j * dtau * xi2))
        if nl.lam != 0.0:
            c2 = nl.lam * _coupling_integral(t_mid, t, omega, power)
            v = v * np.exp(-1j * c2 * np.abs(v) ** (2 * nl.sigma))
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"lens-frame field diverged at t={t:g}")
        if k in wanted:
            tau = math.tanh(omega * t) / omega
            states[wanted[k]] = kinetic_step(Field(grid, v), -tau)
        if record_every and (k % record_every == 0 or k == n_steps):
            rec = observe(Field(grid, v), t, free, nl)
            records.append(rec)
            energies.append((t, lens_frame_energy(Field(grid, v), t, omega, nl)))
            if grad_ceiling is not None and rec.grad_norm >= grad_ceiling:
                status = BLOWUP
                break
    return LensFrameRun(
        status=status,
        t_stop=t,
        omega=omega,
        nl=nl,
        final_v=Field(grid, v),
        states=states,
        records=records,
        energies=energies,
        steps=k,
    )


@dataclass(frozen=True)
class ScatteringTrace:
    times: tuple[float, ...]
    distances: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])) or (self.times and self.times[0] <= 0):
            raise ValueError("sample times must be positive and increasing")
        if any(d < 0 for d in self.distances):
            raise ValueError("distances must be non-negative")

    def is_decreasing(self, floor: float = 1e-8) -> bool:
        """Strict decrease, treating distances below ``floor`` as converged."""
        d = self.distances
        return all(b < a or (a < floor and b < floor) for a, b in zip(d, d[1:]))


def scattering_monitor(run, omega: float, sample_times) -> ScatteringTrace:
    """Sigma-distances between consecutive extracted states ``U_omega(-t_k) u(t_k)``.

    ``run`` is either a :class:`LensFrameRun` (states already extracted) or a
    lab-frame :class:`~qnls.solver.RunOutcome` whose ``fields`` hold the
    sample times.
    """
    times = sorted(float(t) for t in sample_times)
    if isinstance(run, LensFrameRun):
        if run.status == BLOWUP:
            raise ValueError("scattering monitor needs a run without blow-up")
        states = [run.states[t] for t in times]
    else:
        if run.status != COMPLETED:
            raise ValueError(f"scattering monitor needs a completed run, got {run.status}")
        missing = [t for t in times if t not in run.fields]
        if missing:
            raise ValueError(f"run holds no field at t={missing}")
        states = [scattering_extract(run.fields[t], t, omega) for t in times]
    dist = tuple(sigma_norm(b - a) for a, b in zip(states, states[1:]))
    return ScatteringTrace(tuple(times), dist)

