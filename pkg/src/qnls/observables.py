"""Monitored quantities: energies, the operators J(t), H(t), virial data.

For the repulsive potential

    J(t) = omega x sinh(omega t) + i cosh(omega t) grad
    H(t) = x cosh(omega t) + i sinh(omega t)/omega grad

and for the confining one the same expressions with ``omega -> i omega``
(``sinh -> sin``, ``cosh -> cos``, signs adjusted).  With no potential,
``J = i grad`` and ``H = x + i t grad``.

Every integral uses the grid weight ``dx**n``, consistent with :mod:`qnls.grid`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .grid import Field, gradient_norm, l2_norm, lp_norm, moment_norm, spectral_gradient
from .propagators import NonlinearitySpec, PotentialSpec

__all__ = [
    "ObservableRecord",
    "observe",
    "energy",
    "op_J",
    "op_H",
    "j_norm",
    "h_norm",
    "energy_split",
    "momentum",
    "nonlinear_integral",
    "evolution_law_rhs",
    "evolution_law_residual",
    "virial_forcing",
    "virial_closed_form",
    "virial_ode_residual",
    "delta",
    "gn_check",
]

CSV_COLUMNS = (
    "t",
    "mass",
    "energy",
    "e1",
    "e2",
    "variance_y",
    "momentum_p",
    "j_norm",
    "h_norm",
    "grad_norm",
    "nl_norm",
    "sup_norm",
)


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    mass: float
    energy: float
    e1: float
    e2: float
    variance_y: float
    momentum_p: float
    j_norm: float
    h_norm: float
    grad_norm: float
    nl_norm: float
    sup_norm: float

    def as_row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)

    def as_dict(self) -> dict:
        return asdict(self)


assert tuple(f.name for f in fields(ObservableRecord)) == CSV_COLUMNS


def _as_potential(pot) -> PotentialSpec:
    if isinstance(pot, PotentialSpec):
        return pot
    omega = float(pot)
    return PotentialSpec("repulsive", omega) if omega > 0 else PotentialSpec("free", 0.0)


def _jh_coefficients(pot: PotentialSpec, t: float) -> tuple[float, float, float, float]:
    """``(aJ, bJ, aH, bH)`` with ``J = aJ x + i bJ grad`` and ``H = aH x + i bH grad``."""
    w = pot.omega
    if pot.kind == "repulsive":
        return w * math.sinh(w * t), math.cosh(w * t), math.cosh(w * t), math.sinh(w * t) / w
    if pot.kind == "confining":
        return -w * math.sin(w * t), math.cos(w * t), math.cos(w * t), math.sin(w * t) / w
    return 0.0, 1.0, 1.0, float(t)


def _apply(f: Field, a: float, b: float, method: str) -> list[Field]:
    # a x f + i b grad f, one component per axis
    grid = f.grid
    if method == "factorized" and b != 0.0:
        chirp = np.exp(-0.5j * (a / b) * grid.r2)
        grads = spectral_gradient(f.like(chirp * f.values))
        return [f.like(1j * b * np.conj(chirp) * d.values) for d in grads]
    if method not in ("factorized", "direct"):
        raise ValueError(f"unknown method {method!r}")
    if b == 0.0:
        return [f.like(a * c * f.values) for c in grid.coords]
    grads = spectral_gradient(f)
    return [f.like(a * c * f.values + 1j * b * d.values) for c, d in zip(grid.coords, grads)]


def op_J(f: Field, t: float, pot, method: str = "factorized") -> list[Field]:
    """Components of ``J(t) f``.

    ``method="factorized"`` conjugates the spectral gradient by the chirp
    ``exp(i omega |x|^2 tanh(omega t)/2)``; ``"direct"`` applies the defining
    formula.  The two agree whenever the chirped field is resolved.
    """
    aJ, bJ, _, _ = _jh_coefficients(_as_potential(pot), t)
    return _apply(f, aJ, bJ, method)


def op_H(f: Field, t: float, pot, method: str = "factorized") -> list[Field]:
    """Components of ``H(t) f``; at ``t = 0`` this is multiplication by ``x``.

    The factorised form uses the chirp ``coth(omega t)``, which is unresolvable
    for small ``|t|``; records therefore use ``method="direct"``.
    """
    _, _, aH, bH = _jh_coefficients(_as_potential(pot), t)
    return _apply(f, aH, bH, method)


def _vec_norm(parts: list[Field]) -> float:
    return math.sqrt(sum(l2_norm(p) ** 2 for p in parts))


def j_norm(f: Field, t: float, pot, method: str = "direct") -> float:
    return _vec_norm(op_J(f, t, pot, method))


def h_norm(f: Field, t: float, pot, method: str = "direct") -> float:
    return _vec_norm(op_H(f, t, pot, method))


def nonlinear_integral(f: Field, sigma: float) -> float:
    """``||f||_{L^{2 sigma + 2}}^{2 sigma + 2}``."""
    return float(np.sum(np.abs(f.values) ** (2 * sigma + 2)) * f.grid.cell)


def momentum(f: Field) -> float:
    """``p = Im int conj(f) x . grad f``; the variance obeys ``y' = 2 p``."""
    grads = spectral_gradient(f)
    acc = 0.0 + 0.0j
    for c, d in zip(f.grid.coords, grads):
        acc += np.vdot(f.values, c * d.values)
    return float(acc.imag * f.grid.cell)


def energy(f: Field, pot, nl: NonlinearitySpec) -> float:
    pot = _as_potential(pot)
    e = 0.5 * gradient_norm(f) ** 2
    if pot.kind != "free":
        e += 0.5 * pot.sign * pot.omega**2 * moment_norm(f) ** 2
    if nl.lam != 0.0:
        e += nl.lam / (nl.sigma + 1) * nonlinear_integral(f, nl.sigma)
    return e


def _split(jn: float, hn: float, nlint: float, t: float, pot: PotentialSpec, nl: NonlinearitySpec):
    g = nl.lam / (nl.sigma + 1) * nlint
    w = pot.omega
    if pot.kind == "repulsive":
        c2, s2 = math.cosh(w * t) ** 2, math.sinh(w * t) ** 2
        return 0.5 * jn**2 + g * c2, -0.5 * w**2 * hn**2 - g * s2
    if pot.kind == "confining":
        c2, s2 = math.cos(w * t) ** 2, math.sin(w * t) ** 2
        return 0.5 * jn**2 + g * c2, 0.5 * w**2 * hn**2 + g * s2
    return 0.5 * jn**2 + g, 0.0


def energy_split(f: Field, t: float, pot, nl: NonlinearitySpec, method: str = "direct"):
    """``(E1(t), E2(t))`` with ``E1 + E2 = E``.

    Repulsive case::

        E1 = |J f|^2/2 + lam/(sigma+1) cosh^2(omega t) ||f||^{2sigma+2}
        E2 = -omega^2 |H f|^2/2 - lam/(sigma+1) sinh^2(omega t) ||f||^{2sigma+2}
    """
    pot = _as_potential(pot)
    return _split(
        j_norm(f, t, pot, method),
        h_norm(f, t, pot, method),
        nonlinear_integral(f, nl.sigma),
        t,
        pot,
        nl,
    )


def observe(f: Field, t: float, pot, nl: NonlinearitySpec) -> ObservableRecord:
    pot = _as_potential(pot)
    grid = f.grid
    u = f.values
    spec = np.fft.fftn(u)
    grads = [np.fft.ifftn(1j * k * spec) for k in grid.wavenumbers]
    aJ, bJ, aH, bH = _jh_coefficients(pot, t)
    cell = grid.cell
    jn2 = hn2 = 0.0
    p = 0.0 + 0.0j
    for c, d in zip(grid.coords, grads):
        jn2 += np.sum(np.abs(aJ * c * u + 1j * bJ * d) ** 2)
        hn2 += np.sum(np.abs(aH * c * u + 1j * bH * d) ** 2)
        p += np.vdot(u, c * d)
    absu2 = np.abs(u) ** 2
    mass = float(np.sum(absu2) * cell)
    y = float(np.sum(grid.r2 * absu2) * cell)
    grad2 = float(np.sum(grid.xi2 * np.abs(spec) ** 2) / grid.size * cell)
    nlint = float(np.sum(absu2 ** (nl.sigma + 1)) * cell)
    jn, hn = math.sqrt(jn2 * cell), math.sqrt(hn2 * cell)
    e = 0.5 * grad2 + 0.5 * pot.sign * pot.omega**2 * y + nl.lam / (nl.sigma + 1) * nlint
    e1, e2 = _split(jn, hn, nlint, t, pot, nl)
    return ObservableRecord(
        t=float(t),
        mass=mass,
        energy=e,
        e1=e1,
        e2=e2,
        variance_y=y,
        momentum_p=float(p.imag * cell),
        j_norm=jn,
        h_norm=hn,
        grad_norm=math.sqrt(grad2),
        nl_norm=nlint,
        sup_norm=float(np.sqrt(absu2.max())),
    )


def _column(series, name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in series], dtype=float)


def _uniform_step(t: np.ndarray) -> float:
    steps = np.diff(t)
    h = float(np.mean(steps))
    if np.max(np.abs(steps - h)) > 1e-9 * max(abs(h), 1.0):
        raise ValueError("records are not uniformly spaced in time")
    return h


def evolution_law_rhs(t, pot, nl: NonlinearitySpec, n: int, nlint):
    """Right-hand side of ``dE1/dt``; zero when ``sigma = 2/n``."""
    pot = _as_potential(pot)
    t = np.asarray(t, dtype=float)
    w = pot.omega
    coef = w * nl.lam / (2 * nl.sigma + 2) * (2 - n * nl.sigma)
    if pot.kind == "repulsive":
        return coef * np.sinh(2 * w * t) * nlint
    if pot.kind == "confining":
        return -coef * np.sin(2 * w * t) * nlint
    return np.zeros_like(t * nlint)


def evolution_law_residual(series, pot, nl: NonlinearitySpec, n: int = 1) -> float:
    """Max of ``|dE1/dt - rhs| / (|rhs| + scale)`` over interior records.

    ``dE1/dt`` is a central difference of the recorded ``e1``;
    ``scale = omega * max|e1|`` is the natural rate of the series and keeps the
    ratio finite when the right-hand side vanishes.
    """
    if len(series) < 3:
        raise ValueError("need at least 3 records")
    pot = _as_potential(pot)
    t = _column(series, "t")
    h = _uniform_step(t)
    e1 = _column(series, "e1")
    lhs = (e1[2:] - e1[:-2]) / (2 * h)
    rhs = evolution_law_rhs(t[1:-1], pot, nl, n, _column(series, "nl_norm")[1:-1])
    rate = pot.omega if pot.omega > 0 else 1.0
    scale = rate * float(np.max(np.abs(e1)))
    if scale == 0.0:
        scale = 1.0
    return float(np.max(np.abs(lhs - rhs) / (np.abs(rhs) + scale)))


def virial_forcing(series, nl: NonlinearitySpec, n: int) -> np.ndarray:
    """``f(s) = 4E - 2 lam/(sigma+1) (2 - n sigma) ||u(s)||^{2sigma+2}`` per record."""
    e = _column(series, "energy")
    nlint = _column(series, "nl_norm")
    return 4 * e - 2 * nl.lam / (nl.sigma + 1) * (2 - n * nl.sigma) * nlint


def _virial_kernels(pot: PotentialSpec, t: np.ndarray):
    w = pot.omega
    if pot.kind == "repulsive":
        return np.cosh(2 * w * t), np.sinh(2 * w * t) / (2 * w)
    if pot.kind == "confining":
        return np.cos(2 * w * t), np.sin(2 * w * t) / (2 * w)
    return np.ones_like(t), t.copy()


def virial_closed_form(series, pot, nl: NonlinearitySpec, n: int = 1) -> np.ndarray:
    """Predicted ``y(t_k)`` from ``y(0)``, ``y'(0) = 2 p(0)`` and the recorded forcing.

    Repulsive case::

        y(t) = y(0) cosh(2wt) + y'(0) sinh(2wt)/(2w) + int_0^t sinh(2w(t-s))/(2w) f(s) ds

    The convolution is a trapezoid sum over the records, which must be uniformly
    spaced and start at ``t = 0``.
    """
    pot = _as_potential(pot)
    t = _column(series, "t")
    if len(t) < 2:
        raise ValueError("need at least 2 records")
    if t[0] != 0.0:
        raise ValueError("series must start at t = 0")
    h = _uniform_step(t)
    y0 = series[0].variance_y
    ydot0 = 2 * series[0].momentum_p
    forcing = virial_forcing(series, nl, n)
    even, odd = _virial_kernels(pot, t)
    pred = y0 * even + ydot0 * odd
    for k in range(1, len(t)):
        _, kern = _virial_kernels(pot, t[k] - t[: k + 1])
        vals = kern * forcing[: k + 1]
        pred[k] += h * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
    return pred


def virial_ode_residual(series, pot, nl: NonlinearitySpec, n: int = 1) -> np.ndarray:
    """Residual of ``y'' = 4 omega^2 y + f(t)`` (repulsive sign) at interior records.

    ``y''`` is a second difference, so the residual is ``O(h^2)``.
    """
    pot = _as_potential(pot)
    t = _column(series, "t")
    h = _uniform_step(t)
    y = _column(series, "variance_y")
    ydd = (y[2:] - 2 * y[1:-1] + y[:-2]) / h**2
    forcing = virial_forcing(series, nl, n)[1:-1]
    return ydd - (-4 * pot.sign * pot.omega**2 * y[1:-1] + forcing)


def delta(r: float, n: int) -> float:
    """``delta(r) = n (1/2 - 1/r)``."""
    return n * (0.5 - 1.0 / r)


def gn_check(f: Field, t: float, pot, r: float, c_r: float) -> float:
    """Slack ``c_r cosh(wt)^{-delta} ||f||^{1-delta} ||J(t) f||^delta - ||f||_r``.

    Non-negative whenever ``c_r`` is a valid Gagliardo-Nirenberg constant.
    """
    n = f.grid.n
    if r < 2 or (n >= 3 and not r < 2 * n / (n - 2)):
        raise ValueError(f"exponent r={r} outside the Gagliardo-Nirenberg range for n={n}")
    pot = _as_potential(pot)
    d = delta(r, n)
    jn = j_norm(f, t, pot)
    if pot.kind == "repulsive":
        weight = math.cosh(pot.omega * t) ** (-d)
    elif pot.kind == "confining":
        weight = abs(math.cos(pot.omega * t)) ** (-d)
    else:
        weight = 1.0
    return c_r * weight * l2_norm(f) ** (1 - d) * jn**d - lp_norm(f, r)

