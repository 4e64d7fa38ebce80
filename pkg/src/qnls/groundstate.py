"""Ground state ``Q`` of ``-Lap Q / 2 + Q = -lam |Q|^{4/n} Q`` and exact critical solutions.

``n = 1`` is solved by shooting on ``Q(0)`` with bisection; ``n = 2`` by a
Petviashvili iteration on a periodic 2D lattice.  The radial profile is stored
on a uniform mesh in ``r`` and evaluated elsewhere by Hermite interpolation,
with the linear tail ``Q ~ r^{-(n-1)/2} e^{-sqrt(2) r}`` beyond the mesh.

The blow-up family (free equation, critical power)::

    v(t, x) = (d/(T-t))^{n/2} exp(i th - i|x-x1|^2/(2(T-t)) + i d^2/(T-t))
              * Q(d ((x - x1)/(T-t) - x0))

and the global solution of the repulsive equation at ``omega = 1/T``::

    u(t, x) = (e^{t/T}/T)^{n/2} Q(x e^{t/T}/T) exp(-i|x|^2/(2T) + i(e^{2t/T}+1)/(2T))
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .grid import Field, Grid, l2_norm

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# Shooting is trusted down to this fraction of Q(0); below it the exact
# exponential tail is spliced in.
_SPLICE_LEVEL = 1e-3
_TAIL_LEVEL = 1e-8


@dataclass(frozen=True)
class GroundStateQ:
    """Radial ground-state profile sampled on ``r = 0, dr, ..., R``."""

    n: int
    lam: float
    r: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    dq: np.ndarray = field(repr=False)
    mass: float = 0.0

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def R(self) -> float:
        return float(self.r[-1])

    @property
    def q0(self) -> float:
        return float(self.q[0])

    def __call__(self, rho) -> np.ndarray:
        """Evaluate ``Q(|y|)`` at radii ``rho`` (any shape, values >= 0)."""
        rho = np.abs(np.asarray(rho, dtype=float))
        out = np.empty_like(rho)
        inside = rho <= self.R
        out[inside] = self._spline(rho[inside])
        far = ~inside
        if np.any(far):
            rf = rho[far]
            out[far] = (
                self.q[-1] * np.exp(-SQRT2 * (rf - self.R)) * (self.R / rf) ** ((self.n - 1) / 2)
            )
        return out

    @property
    def _spline(self):
        sp = self.__dict__.get("_sp")
        if sp is None:
            sp = CubicHermiteSpline(self.r, self.q, self.dq)
            object.__setattr__(self, "_sp", sp)
        return sp

    def residual(self) -> float:
        """Sup of :func:`radial_residual` over the sample set."""
        return float(np.max(np.abs(radial_residual(self.r, self.q, self.dq, self.n, self.lam))))

    def width(self) -> float:
        """Radius at which ``Q`` falls to half of ``Q(0)``."""
        idx = int(np.argmax(self.q < 0.5 * self.q[0]))
        return float(self.r[idx])


def _d1(vals: np.ndarray, h: float) -> np.ndarray:
    # 4th-order central difference at interior points vals[2:-2]
    return (-vals[4:] + 8 * vals[3:-1] - 8 * vals[1:-3] + vals[:-4]) / (12 * h)


def radial_residual(r: np.ndarray, q: np.ndarray, dq: np.ndarray, n: int, lam: float) -> np.ndarray:
    """Pointwise defect of the radial profile at ``r[2:-2]``.

    Two first-order relations are checked with 4th-order differences:
    ``Q' - dq`` and ``-(dq' + (n-1)/r dq)/2 + Q + lam Q^{1+4/n}``.  Working
    with the stored derivative keeps roundoff amplification at ``1/dr``.
    """
    h = r[1] - r[0]
    rr = r[2:-2]
    ddq = _d1(dq, h)
    if n > 1:
        radial = np.divide(dq[2:-2], rr, out=np.zeros_like(ddq), where=rr > 0)
        lap = np.where(rr > 0, ddq + (n - 1) * radial, n * ddq)
    else:
        lap = ddq
    qq = q[2:-2]
    ode = -0.5 * lap + qq + lam * np.abs(qq) ** (4.0 / n) * qq
    slope = _d1(q, h) - dq[2:-2]
    return np.maximum(np.abs(ode), np.abs(slope))


def _rhs_1d(lam: float):
    def f(r, y):
        return [y[1], 2.0 * y[0] + 2.0 * lam * abs(y[0]) ** 4 * y[0]]

    return f


def _shoot(a: float, lam: float, r_max: float):
    """Integrate from ``Q(0) = a``; returns +1 overshoot, -1 undershoot, and the solution."""

    def crossed(r, y):
        return y[0]

    crossed.terminal = True
    crossed.direction = -1

    def turned(r, y):
        return y[1]

    turned.terminal = True
    turned.direction = 1

    sol = solve_ivp(
        _rhs_1d(lam),
        (0.0, r_max),
        [a, 0.0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-16,
        events=(crossed, turned),
        dense_output=True,
    )
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _solve_1d(lam: float, dr: float, max_iter: int) -> GroundStateQ:
    # Q(0) for the exact profile scaled by |lam|; the bracket is generous.
    lo, hi = 0.5 * abs(lam) ** -0.25, 2.5 * abs(lam) ** -0.25
    r_max = 40.0
    if _shoot(lo, lam, r_max)[0] != -1 or _shoot(hi, lam, r_max)[0] != 1:
        raise RuntimeError("shooting bracket does not straddle the ground state")
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        verdict, _ = _shoot(mid, lam, r_max)
        if verdict == 1:
            hi = mid
        else:
            lo = mid
        it += 1
    else:
        raise RuntimeError(f"shooting did not converge in {max_iter} bisections")
    a = 0.5 * (lo + hi)
    _, sol = _shoot(a, lam, r_max)
    # exact profile up to the splice point, exponential tail afterwards
    r_end = sol.t[-1]
    probe = np.arange(0.0, r_end, dr)
    vals = sol.sol(probe)[0]
    below = np.nonzero(vals < _SPLICE_LEVEL * a)[0]
    if below.size == 0:
        raise RuntimeError("shooting trajectory never reached the tail region")
    r_m = probe[below[0]]
    q_m = float(sol.sol(r_m)[0])
    R = r_m + math.log(q_m / (_TAIL_LEVEL * a * 0.5)) / SQRT2
    r = np.arange(0.0, R + dr, dr)
    core = r <= r_m
    y = sol.sol(r[core])
    q = np.empty_like(r)
    dq = np.empty_like(r)
    q[core], dq[core] = y[0], y[1]
    tail = q_m * np.exp(-SQRT2 * (r[~core] - r_m))
    q[~core], dq[~core] = tail, -SQRT2 * tail
    mass = 2.0 * _radial_integral(r, q**2)
    return GroundStateQ(1, float(lam), r, q, dq, mass)


def _radial_integral(r: np.ndarray, vals: np.ndarray) -> float:
    # composite Simpson on the uniform mesh (plus a trapezoid panel if odd)
    from scipy.integrate import simpson

    return float(simpson(vals, x=r))


def _solve_2d(lam: float, dr: float, max_iter: int, m: int = 512, L: float = 16.0) -> GroundStateQ:
    """Petviashvili iteration for ``-Lap Q/2 + Q = |lam| Q^3`` on a periodic square."""
    x = -L + (2 * L / m) * np.arange(m)
    X, Y = np.meshgrid(x, x, indexing="ij")
    k = 2 * np.pi * np.fft.fftfreq(m, d=2 * L / m)
    K2 = k[:, None] ** 2 + k[None, :] ** 2
    symbol = 0.5 * K2 + 1.0
    q = 2.0 * np.exp(-(X**2 + Y**2))
    g = abs(lam)
    gamma = 1.5  # p / (p - 1) for the cubic term
    err = np.inf
    for it in range(max_iter):
        q_hat = np.fft.fft2(q)
        n_hat = np.fft.fft2(g * q**3)
        ratio = np.sum(symbol * np.abs(q_hat) ** 2) / np.real(np.sum(np.conj(q_hat) * n_hat))
        q_new = np.real(np.fft.ifft2(ratio**gamma * n_hat / symbol))
        err = float(np.max(np.abs(q_new - q)))
        q = q_new
        if err < 1e-14 * np.max(np.abs(q)) and abs(ratio - 1) < 1e-13:
            break
    else:
        raise RuntimeError(f"Petviashvili iteration stalled (last change {err:.2e})")
    # the y = 0 row is a trigonometric polynomial in x: evaluate it exactly
    row = q[:, m // 2]
    R_lim = 0.9 * L
    r = np.arange(0.0, R_lim, dr)
    qr, dqr = _trig_eval(row, x[0], k, r)
    cut = np.nonzero(qr < _TAIL_LEVEL * qr[0] * 0.5)[0]
    if cut.size:
        r, qr, dqr = r[: cut[0] + 1], qr[: cut[0] + 1], dqr[: cut[0] + 1]
    mass = float(np.sum(q**2) * (2 * L / m) ** 2)
    return GroundStateQ(2, float(lam), r, qr, dqr, mass)


def _trig_eval(samples: np.ndarray, x0: float, k: np.ndarray, pts: np.ndarray):
    """Values and derivative of the trigonometric interpolant of ``samples`` at ``pts``."""
    m = samples.size
    coef = np.fft.fft(samples) / m
    rel = pts - x0
    nyq = m // 2
    vals = np.zeros(pts.size)
    ders = np.zeros(pts.size)
    for start in range(0, pts.size, 1024):
        sl = slice(start, start + 1024)
        basis = np.exp(1j * np.outer(rel[sl], k))
        basis[:, nyq] = np.cos(k[nyq] * rel[sl])
        vals[sl] = np.real(basis @ coef)
        dbasis = 1j * k * basis
        dbasis[:, nyq] = -k[nyq] * np.sin(k[nyq] * rel[sl])
        ders[sl] = np.real(dbasis @ coef)
    return vals, ders


def solve_q(n: int, lam: float, dr: float = 1e-3, max_iter: int = 2000) -> GroundStateQ:
    """Positive radial ground state for ``n in {1, 2}`` and ``lam < 0``.

    The result is checked against the radial ODE; a residual above ``1e-8`` on
    the sample set raises ``RuntimeError``.
    """
    if not lam < 0:
        raise ValueError(f"ground state needs a focusing coupling lam < 0, got {lam}")
    if n == 1:
        gs = _solve_1d(lam, dr, max_iter=min(max_iter, 200))
    elif n == 2:
        gs = _solve_2d(lam, dr=dr, max_iter=max_iter)
    else:
        raise ValueError(f"ground states are provided for n = 1, 2 only (got n={n})")
    res = gs.residual()
    if res > 1e-8:
        raise RuntimeError(f"ground state residual {res:.2e} exceeds 1e-8")
    if np.any(gs.q <= 0) or np.any(np.diff(gs.q) >= 0):
        raise RuntimeError("ground state profile is not positive and decreasing")
    logger.info("ground state n=%d lam=%g: Q(0)=%.15g mass=%.15g", n, lam, gs.q0, gs.mass)
    return gs


def weinstein_constant(Q: GroundStateQ, lam: float | None = None, n: int | None = None) -> float:
    """Sharp constant ``c`` in ``||f||_r <= c ||f||^{1-d} ||grad f||^d`` with ``r = 2 + 4/n``.

    ``c = [(sigma + 1) / (2 |lam| ||Q||^{4/n})]^{1/(2 + 4/n)}``, ``sigma = 2/n``.
    """
    lam = Q.lam if lam is None else lam
    n = Q.n if n is None else n
    if not lam < 0:
        raise ValueError("the sharp constant is tied to a focusing coupling lam < 0")
    sigma = 2.0 / n
    base = (sigma + 1) / (2 * abs(lam) * Q.mass ** (2.0 / n))
    return base ** (1.0 / (2 + 4.0 / n))


@dataclass(frozen=True)
class MerleParams:
    T: float = 1.0
    delta: float = 1.0
    theta: float = 0.0
    x0: tuple[float, ...] | float = 0.0
    x1: tuple[float, ...] | float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")


def _vec(v, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(v, dtype=float), (n,))


def _check_profile(grid: Grid, Q: GroundStateQ, scale: float, chirp: float, center) -> None:
    """Reject profiles ``Q(scale |x - center|) e^{i chirp |x-center|^2/2}`` the lattice cannot hold."""
    core = Q.width() / scale
    if core < 4 * grid.dx:
        raise ValueError(
            f"profile core {core:.3g} under-resolved by dx={grid.dx:.3g} (contraction {scale:.3g})"
        )
    # radius at which the amplitude drops to ~1e-12 of the peak
    r_sig = (Q.width() + 12 * math.log(10) / SQRT2) / scale
    if abs(chirp) * r_sig > grid.nyquist:
        raise ValueError(
            f"chirp wavenumber {abs(chirp) * r_sig:.3g} exceeds grid bandwidth {grid.nyquist:.3g}"
        )
    edge = grid.L - float(np.max(np.abs(center)))
    if Q(np.array([edge * scale]))[0] > 1e-8 * Q.q0:
        logger.warning("profile not box-supported: Q at the box edge is %.2e", Q(np.array([edge * scale]))[0])


def _radius(grid: Grid, center) -> np.ndarray:
    d2 = np.zeros(grid.shape)
    for c, c0 in zip(grid.coords, center):
        d2 = d2 + (c - c0) ** 2
    return d2


def _merle_field(grid: Grid, Q: GroundStateQ, p: MerleParams, s: float) -> Field:
    # s = T - t
    n = grid.n
    x0, x1 = _vec(p.x0, n), _vec(p.x1, n)
    scale = p.delta / s
    _check_profile(grid, Q, scale, 1.0 / s, x1 + x0 * s / p.delta)
    d2 = _radius(grid, x1)
    arg2 = np.zeros(grid.shape)
    for c, a, b in zip(grid.coords, x1, x0):
        arg2 = arg2 + (p.delta * ((c - a) / s - b)) ** 2
    phase = p.theta - d2 / (2 * s) + p.delta**2 / s
    vals = scale ** (n / 2) * np.exp(1j * phase) * Q(np.sqrt(arg2))
    return Field(grid, vals)


def merle_initial_data(grid: Grid, Q: GroundStateQ, p: MerleParams) -> Field:
    """Minimal-mass data that blows up for the free equation at ``t = T``."""
    if grid.n != Q.n:
        raise ValueError("grid and ground state dimensions differ")
    f = _merle_field(grid, Q, p, p.T)
    mass = l2_norm(f) ** 2
    if abs(mass / Q.mass - 1) > 1e-6:
        logger.warning("sampled Merle data has mass %.10g, ground state %.10g", mass, Q.mass)
    return f


def merle_exact_v(grid: Grid, Q: GroundStateQ, p: MerleParams, t: float) -> Field:
    """Exact blow-up solution of the free equation at time ``t < T``."""
    if not t < p.T:
        raise ValueError(f"t={t} must precede the blow-up time T={p.T}")
    if grid.n != Q.n:
        raise ValueError("grid and ground state dimensions differ")
    return _merle_field(grid, Q, p, p.T - t)


def critical_exact_solution(grid: Grid, Q: GroundStateQ, T: float, t: float) -> Field:
    """Global solution of the repulsive equation with ``omega = 1/T`` (critical power)."""
    if not T > 0:
        raise ValueError("T must be positive")
    if grid.n != Q.n:
        raise ValueError("grid and ground state dimensions differ")
    n = grid.n
    scale = math.exp(t / T) / T
    _check_profile(grid, Q, scale, 1.0 / T, np.zeros(n))
    r2 = grid.r2
    phase = -r2 / (2 * T) + (math.exp(2 * t / T) + 1) / (2 * T)
    vals = scale ** (n / 2) * Q(np.sqrt(r2) * scale) * np.exp(1j * phase)
    return Field(grid, vals)
