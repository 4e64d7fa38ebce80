"""Exact linear flows for ``i u_t + (1/2) Lap u = V u + lam |u|^{2 sigma} u``.

Three potentials are supported through :class:`PotentialSpec`:

* ``free``       ``V = 0``
* ``confining``  ``V = +omega^2 |x|^2 / 2``
* ``repulsive``  ``V = -omega^2 |x|^2 / 2``

The sub-flows used by the splitting solver (:func:`kinetic_step`,
:func:`phase_step`) are exact.  The harmonic propagators are computed with an
exact factorisation of Mehler's kernel into a free spectral step, a dilation
and an outgoing chirp::

    U_rep(t) f  = cosh(wt)^(-n/2) e^{ i w |x|^2 tanh(wt)/2} [U_0(tanh(wt)/w) f](x / cosh(wt))
    U_conf(t) f = cos(wt)^(-n/2)  e^{-i w |x|^2 tan(wt)/2}  [U_0(tan(wt)/w) f](x / cos(wt))

and checked against :func:`mehler_quadrature_oracle`, a literal trapezoid
evaluation of the kernel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, l2_norm, lp_norm, resample, sup_norm

logger = logging.getLogger(__name__)

KINDS = ("free", "confining", "repulsive")

# Closest a confining propagation may get to the focus, in units of 1/omega.
CONFINING_MARGIN = 1e-6

_ORACLE_CHUNK = 256


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "free"
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != "free" and not self.omega > 0:
            raise ValueError(f"{self.kind} potential needs omega > 0, got {self.omega}")

    @property
    def sign(self) -> int:
        """+1 confining, -1 repulsive, 0 free."""
        return {"free": 0, "confining": 1, "repulsive": -1}[self.kind]

    def values(self, grid) -> np.ndarray:
        if self.kind == "free":
            return np.zeros(grid.shape)
        return 0.5 * self.sign * self.omega**2 * grid.r2


@dataclass(frozen=True)
class NonlinearitySpec:
    lam: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def label(self) -> str:
        if self.lam < 0:
            return "focusing"
        if self.lam > 0:
            return "defocusing"
        return "linear"

    def check_dimension(self, n: int) -> None:
        """Raise unless ``sigma < 2/(n-2)`` when ``n >= 3``."""
        if n >= 3 and not self.sigma < 2.0 / (n - 2):
            raise ValueError(
                f"sigma={self.sigma} violates the energy-subcritical bound "
                f"sigma < 2/(n-2) = {2.0 / (n - 2):g} for n={n}"
            )

    def potential_energy_density(self, u: np.ndarray) -> np.ndarray:
        return np.abs(u) ** (2 * self.sigma + 2)


def kinetic_step(f: Field, dt: float) -> Field:
    """Exact free flow: multiply by ``exp(-i |xi|^2 dt / 2)`` in Fourier space."""
    spec = np.fft.fftn(f.values)
    spec *= np.exp(-0.5j * dt * f.grid.xi2)
    return f.like(np.fft.ifftn(spec))


def phase_step(f: Field, dt: float, pot: PotentialSpec, nl: NonlinearitySpec) -> Field:
    """Exact flow of ``i u_t = (V + lam |u|^{2 sigma}) u``; ``|u|`` is unchanged."""
    u = f.values
    phase = pot.values(f.grid)
    if nl.lam != 0.0:
        phase = phase + nl.lam * np.abs(u) ** (2 * nl.sigma)
    if not np.any(phase):
        return f.like(u)
    return f.like(u * np.exp(-1j * dt * phase))


def _lens_parameters(kind: str, t: float, omega: float) -> tuple[float, float, float]:
    """(free time, dilation, outgoing chirp coefficient) of the Mehler factorisation."""
    wt = omega * t
    if kind == "repulsive":
        return math.tanh(wt) / omega, math.cosh(wt), omega * math.tanh(wt)
    if kind == "confining":
        return math.tan(wt) / omega, math.cos(wt), -omega * math.tan(wt)
    raise ValueError(f"no Mehler kernel for kind {kind!r}")


def _check_time(kind: str, t: float, omega: float) -> None:
    if t == 0:
        raise ValueError("t = 0: the propagator is the identity; call sites must not ask for it")
    if not omega > 0:
        raise ValueError("omega must be positive")
    if kind == "confining" and abs(t) >= math.pi / (2 * omega) - CONFINING_MARGIN / omega:
        raise ValueError(
            f"|t|={abs(t):g} is outside the confining kernel domain |t| < pi/(2 omega)"
            f" = {math.pi / (2 * omega):g}"
        )


def _mehler_fast(f: Field, t: float, omega: float, kind: str) -> Field:
    _check_time(kind, t, omega)
    grid = f.grid
    tau, scale, chirp = _lens_parameters(kind, t, omega)
    v = kinetic_step(f, tau)
    v = resample(v, scale)
    vals = scale ** (-grid.n / 2) * np.exp(0.5j * chirp * grid.r2) * v.values
    amp = np.abs(vals)
    significant = amp > 1e-8 * amp.max() if amp.max() > 0 else amp > 0
    if np.any(significant):
        k_max = abs(chirp) * float(np.sqrt(grid.r2[significant].max()))
        if k_max > grid.nyquist:
            logger.warning(
                "Mehler output chirp reaches wavenumber %.3g above grid bandwidth %.3g",
                k_max,
                grid.nyquist,
            )
    return f.like(vals)


def mehler_repulsive(f: Field, t: float, omega: float) -> Field:
    """``U_omega(t) f`` for ``V = -omega^2 |x|^2 / 2``.

    The result is the restriction to the box of the solution on R^n.  Because the
    dilation factor ``cosh(omega t)`` is at least one, no sample ever needs data
    from outside the box; the output however loses mass through the boundary
    once the wave packet expands past ``L``.
    """
    return _mehler_fast(f, t, omega, "repulsive")


def mehler_confining(f: Field, t: float, omega: float) -> Field:
    """``U_omega(t) f`` for ``V = +omega^2 |x|^2 / 2``, ``0 < |t| < pi / (2 omega)``."""
    return _mehler_fast(f, t, omega, "confining")


def mehler(f: Field, t: float, omega: float, kind: str) -> Field:
    """Propagator dispatch; ``t = 0`` returns a copy and ``free`` uses the spectral flow."""
    if t == 0:
        return f.like(f.values)
    if kind == "free" or omega == 0:
        return kinetic_step(f, t)
    return _mehler_fast(f, t, omega, kind)


def mehler_quadrature_oracle(f: Field, t: float, omega: float, kind: str) -> Field:
    """Literal trapezoid evaluation of Mehler's kernel, ``O(m^2)`` per axis.

    The kernel is separable, so in ``n`` dimensions the 1D quadrature matrix is
    applied along each axis.  Only meaningful while the integrand's chirp
    ``omega |y| cot``/``coth(omega t)`` is resolved by the lattice.
    """
    _check_time(kind, t, omega)
    grid = f.grid
    if grid.m > 4096:
        raise ValueError("quadrature oracle limited to m <= 4096")
    wt = omega * t
    if kind == "repulsive":
        s, c = math.sinh(wt), math.cosh(wt)
    else:
        s, c = math.sin(wt), math.cos(wt)
    pref = np.exp(-0.25j * math.pi * np.sign(t)) * math.sqrt(abs(omega / (2 * math.pi * s)))
    x = grid.x
    half = np.exp(0.5j * omega * c / s * x**2)
    vals = f.values
    for ax in range(grid.n):
        moved = np.moveaxis(vals, ax, 0).reshape(grid.m, -1)
        src = half[:, None] * moved
        out = np.empty_like(src)
        for start in range(0, grid.m, _ORACLE_CHUNK):
            sl = slice(start, start + _ORACLE_CHUNK)
            kern = np.exp(-1j * omega / s * np.outer(x[sl], x))
            out[sl] = half[sl, None] * (kern @ src)
        out *= pref * grid.dx
        shape = (grid.m,) + tuple(np.delete(np.array(vals.shape), ax))
        vals = np.moveaxis(out.reshape(shape), 0, ax)
    return f.like(vals)


def dispersion_check(f: Field, t: float, omega: float) -> float:
    """Ratio ``||U_omega(t) f||_inf |2 pi t|^{n/2} / ||f||_1`` (at most 1 in theory).

    ``omega = 0`` is the free flow.  For ``omega > 0`` the factorisation above
    gives ``||U_omega(t) f||_inf = cosh(wt)^{-n/2} ||U_0(tanh(wt)/w) f||_inf``
    on all of R^n, so the box never has to hold the expanded packet.
    """
    if t == 0:
        raise ValueError("dispersion ratio undefined at t = 0")
    if omega < 0:
        raise ValueError("omega must be non-negative")
    n = f.grid.n
    if omega == 0:
        peak = sup_norm(kinetic_step(f, t))
    else:
        tau, scale, _ = _lens_parameters("repulsive", t, omega)
        peak = scale ** (-n / 2) * sup_norm(kinetic_step(f, tau))
    return peak * abs(2 * math.pi * t) ** (n / 2) / lp_norm(f, 1)


def classical_ray(
    kind: str,
    x0,
    t,
    omega: float = 0.0,
    chirp: float = 0.0,
    offset: float | None = None,
):
    """Ray ``x(t)`` of ``x'' = -grad V`` from ``x0`` with initial phase ``chirp |x|^2 / 2``.

    For the confining potential an ``offset`` ``t0`` (with ``|t0| < pi/(2 omega)``)
    selects the chirp ``-omega tan(omega t0)``, giving rays
    ``x0 cos(omega (t + t0)) / cos(omega t0)``.  For the repulsive potential the
    chirp ``-omega b`` gives ``x0 (cosh(omega t) - b sinh(omega t))``.
    """
    x0 = np.asarray(x0, dtype=float)
    t = np.asarray(t, dtype=float)
    if kind not in KINDS:
        raise ValueError(f"unknown potential kind {kind!r}")
    if offset is not None:
        if kind != "confining":
            raise ValueError("offset parametrisation only exists for the confining potential")
        if not abs(offset) < math.pi / (2 * omega):
            raise ValueError(f"offset t0={offset} outside |t0| < pi/(2 omega)")
        return x0 * np.cos(omega * (t + offset)) / math.cos(omega * offset)
    if kind == "free":
        return x0 * (1 + chirp * t)
    if not omega > 0:
        raise ValueError("omega must be positive for harmonic rays")
    if kind == "confining":
        return x0 * (np.cos(omega * t) + chirp / omega * np.sin(omega * t))
    return x0 * (np.cosh(omega * t) + chirp / omega * np.sinh(omega * t))


def ray_focus_time(kind: str, omega: float = 0.0, chirp: float = 0.0, offset: float | None = None):
    """First ``t > 0`` at which every ray of the family hits the origin, or ``None``."""
    if offset is not None:
        if kind != "confining":
            raise ValueError("offset parametrisation only exists for the confining potential")
        return math.pi / (2 * omega) - offset
    if kind == "free":
        return -1.0 / chirp if chirp < 0 else None
    if kind == "confining":
        return (math.pi / 2 + math.atan(chirp / omega)) / omega
    if chirp < -omega:
        return math.atanh(-omega / chirp) / omega
    return None


def mass(f: Field) -> float:
    return l2_norm(f) ** 2
