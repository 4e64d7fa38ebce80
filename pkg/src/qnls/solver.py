"""Strang-split time evolution with blow-up detection.

One step is ``phase(dt/2) o kinetic(dt) o phase(dt/2)``.  Both sub-flows are
exact and unitary, so the discrete mass is conserved to roundoff and the scheme
is second order in ``dt``.  A negative ``t_end`` evolves backward.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import Field, gradient_norm, l2_norm
from .observables import ObservableRecord, observe
from .propagators import NonlinearitySpec, PotentialSpec

logger = logging.getLogger(__name__)

COMPLETED = "completed"
BLOWUP = "blowup_detected"
EXHAUSTED = "resolution_exhausted"

DEFAULT_CEILING_FACTOR = 1e3
DEFAULT_GUARD_FACTOR = 0.35


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls.

    ``grad_ceiling`` and ``resolution_guard`` are absolute thresholds on
    ``||grad u||`` and ``||grad u|| * dx``.  ``None`` means
    ``1e3 * ||grad u0||`` and ``0.35 * ||u0||`` respectively.  With ``adapt``
    the step is ``dt0 * min(1, (||grad u0|| / ||grad u||)^2)``, which bounds the
    kinetic phase rotation per step while the solution concentrates.
    """

    dt0: float
    t_end: float
    record_every: int = 10
    adapt: bool = False
    grad_ceiling: float | None = None
    resolution_guard: float | None = None
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not self.dt0 > 0:
            raise ValueError("dt0 must be positive")
        if self.t_end == 0:
            raise ValueError("t_end must be non-zero")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        for name in ("grad_ceiling", "resolution_guard"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RunOutcome:
    status: str
    t_stop: float
    series: list[ObservableRecord]
    final: Field
    steps: int = 0
    blowup: "BlowupEstimate | None" = None
    fields: dict[float, Field] = field(default_factory=dict)

    @property
    def t_detect(self) -> float | None:
        return self.t_stop if self.status == BLOWUP else None


class _Stepper:
    """Array-level Strang stepper with cached multipliers."""

    def __init__(self, grid, pot: PotentialSpec, nl: NonlinearitySpec):
        self.grid = grid
        self.nl = nl
        self.V = pot.values(grid)
        self.has_V = pot.kind != "free"
        self._cache_dt = None

    def _prepare(self, dt: float):
        if dt != self._cache_dt:
            self._half_V = np.exp(-0.5j * dt * self.V) if self.has_V else None
            self._kin = np.exp(-0.5j * dt * self.grid.xi2)
            self._cache_dt = dt

    def _phase(self, u: np.ndarray, dt_half: float) -> np.ndarray:
        nl = self.nl
        if nl.lam != 0.0:
            rot = np.exp((-1j * dt_half * nl.lam) * np.abs(u) ** (2 * nl.sigma))
            if self.has_V:
                rot *= self._half_V
            return u * rot
        if self.has_V:
            return u * self._half_V
        return u

    def step(self, u: np.ndarray, dt: float) -> tuple[np.ndarray, float]:
        """Advance one step; also returns ``||grad||`` of the mid-step state."""
        self._prepare(dt)
        u = self._phase(u, 0.5 * dt)
        spec = np.fft.fftn(u)
        g2 = float(np.sum(self.grid.xi2 * (spec.real**2 + spec.imag**2)))
        u = np.fft.ifftn(spec * self._kin)
        u = self._phase(u, 0.5 * dt)
        return u, math.sqrt(g2 / self.grid.size * self.grid.cell)


def strang_step(f: Field, dt: float, pot: PotentialSpec, nl: NonlinearitySpec) -> Field:
    u, _ = _Stepper(f.grid, pot, nl).step(f.values, dt)
    if not np.all(np.isfinite(u)):
        return Field(f.grid, u, diverged=True)
    return f.like(u)


def evolve(
    u0: Field,
    pot: PotentialSpec,
    nl: NonlinearitySpec,
    cfg: SolverConfig,
    t0: float = 0.0,
    keep_fields=(),
) -> RunOutcome:
    """Integrate from ``t0`` to ``t0 + cfg.t_end``.

    ``keep_fields`` lists times (relative to ``t0``; must be multiples of the
    fixed step) at which the full field is stored in ``RunOutcome.fields``.
    """
    nl.check_dimension(u0.grid.n)
    grid = u0.grid
    stepper = _Stepper(grid, pot, nl)
    direction = 1.0 if cfg.t_end > 0 else -1.0
    horizon = abs(cfg.t_end)
    g0 = gradient_norm(u0)
    ceiling = cfg.grad_ceiling if cfg.grad_ceiling is not None else DEFAULT_CEILING_FACTOR * g0
    guard = (
        cfg.resolution_guard
        if cfg.resolution_guard is not None
        else DEFAULT_GUARD_FACTOR * l2_norm(u0)
    )
    keep = {round(abs(tk) / cfg.dt0): tk for tk in keep_fields} if not cfg.adapt else {}

    u = np.array(u0.values)
    series = [observe(u0, t0, pot, nl)]
    fields_out: dict[float, Field] = {}
    if 0 in keep:
        fields_out[keep[0]] = u0
    elapsed = 0.0
    n_fixed = max(1, round(horizon / cfg.dt0))
    # keep dt0 itself when it tiles the horizon so resumed runs repeat the step sequence
    if abs(n_fixed * cfg.dt0 - horizon) <= 1e-9 * horizon:
        dt_fixed = cfg.dt0
    else:
        dt_fixed = horizon / n_fixed
    g = g0
    k = 0
    status = COMPLETED
    last_good = (u, elapsed)

    while True:
        if cfg.adapt:
            if elapsed >= horizon * (1 - 1e-14):
                break
            scale = 1.0 if g <= g0 or g0 == 0 else (g0 / g) ** 2
            dt = min(cfg.dt0 * scale, horizon - elapsed)
        else:
            if k >= n_fixed:
                break
            dt = dt_fixed
        if k >= cfg.max_steps:
            logger.warning("step cap %d reached at t=%g", cfg.max_steps, elapsed)
            status = EXHAUSTED
            break
        u_new, g_mid = stepper.step(u, direction * dt)
        k += 1
        elapsed = k * dt_fixed if not cfg.adapt else elapsed + dt
        if not np.all(np.isfinite(u_new)):
            status = EXHAUSTED
            u, elapsed = last_good
            break
        u = u_new
        g = g_mid
        last_good = (u, elapsed)
        t_now = t0 + direction * elapsed
        crossing = g >= ceiling
        exhausted = g * grid.dx > guard
        final_step = (k >= n_fixed) if not cfg.adapt else elapsed >= horizon * (1 - 1e-14)
        if k % cfg.record_every == 0 or crossing or exhausted or final_step:
            f_now = Field(grid, u)
            series.append(observe(f_now, t_now, pot, nl))
            g = series[-1].grad_norm
            crossing = g >= ceiling
        if k in keep:
            fields_out[keep[k]] = Field(grid, u)
        if crossing:
            status = BLOWUP
            break
        if exhausted:
            status = EXHAUSTED
            break

    t_stop = t0 + direction * elapsed
    final = Field(grid, u)
    if series[-1].t != t_stop:
        series.append(observe(final, t_stop, pot, nl))
    out = RunOutcome(status, t_stop, series, final, steps=k, fields=fields_out)
    if status == BLOWUP:
        out.blowup = detect_blowup(series)
    return out


@dataclass(frozen=True)
class BlowupEstimate:
    T: float
    alpha: float
    coefficient: float
    residual: float
    n_points: int


def detect_blowup(series, min_growth: float = 2.0, min_points: int = 6) -> BlowupEstimate | None:
    """Fit ``c |T - t|^(-alpha)`` to the last decade of ``||grad u||`` growth.

    Works for forward and backward runs (times are measured along the run).
    Returns ``None`` when the tail is not growing by at least ``min_growth``.
    """
    t = np.array([r.t for r in series], dtype=float)
    g = np.array([r.grad_norm for r in series], dtype=float)
    if len(t) < min_points:
        return None
    sgn = 1.0 if t[-1] >= t[0] else -1.0
    s = sgn * t
    # last monotone stretch reaching the final value, capped at one decade
    start = len(g) - 1
    while start > 0 and g[start - 1] < g[start] and g[start - 1] >= g[-1] / 10:
        start -= 1
    s_w, g_w = s[start:], g[start:]
    if len(s_w) < min_points or g_w[-1] < min_growth * g_w[0]:
        return None
    logg = np.log(g_w)
    span = s_w[-1] - s_w[0]

    def fit(T):
        A = np.column_stack([np.ones_like(s_w), -np.log(T - s_w)])
        coef, *_ = np.linalg.lstsq(A, logg, rcond=None)
        res = float(np.sqrt(np.mean((A @ coef - logg) ** 2)))
        return res, coef

    lo = s_w[-1] + 1e-9 * max(span, 1e-12)
    hi = s_w[-1] + 2.0 * span
    opt = minimize_scalar(lambda T: fit(T)[0], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * max(span, 1e-12)})
    T_hat = float(opt.x)
    res, coef = fit(T_hat)
    return BlowupEstimate(
        T=sgn * T_hat,
        alpha=float(coef[1]),
        coefficient=float(np.exp(coef[0])),
        residual=res,
        n_points=len(s_w),
    )
