"""Closed-form decision functions: exponent algebra, bootstrap bound, blow-up tests and time maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid import Field, gradient_norm, moment_norm
from .observables import momentum, nonlinear_integral
from .propagators import NonlinearitySpec

GLOBAL = math.inf
"""Returned by the time maps when the solution exists for all time."""

VERDICTS = ("future", "past", "both", "inconclusive")

_IDENTITY_TOL = 1e-14


@dataclass(frozen=True)
class AdmissiblePair:
    """Strichartz pair with ``2/q = delta(r) = n (1/2 - 1/r)``."""

    q: float
    r: float
    n: int

    @property
    def delta(self) -> float:
        return self.n * (0.5 - 1.0 / self.r)

    def __post_init__(self):
        n, r = self.n, self.r
        if r < 2:
            raise ValueError(f"r={r} < 2")
        if n == 2 and math.isinf(r):
            raise ValueError("r = inf is excluded for n = 2")
        if n >= 3 and not r < 2 * n / (n - 2):
            raise ValueError(f"r={r} must be < 2n/(n-2) = {2 * n / (n - 2):g}")
        if not math.isclose(2.0 / self.q, self.delta, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(f"2/q = {2 / self.q:g} differs from delta(r) = {self.delta:g}")

    @classmethod
    def from_r(cls, r: float, n: int) -> "AdmissiblePair":
        d = n * (0.5 - 1.0 / r)
        q = math.inf if d == 0 else 2.0 / d
        return cls(q, r, n)


def _conj(p: float) -> float:
    """Hoelder conjugate exponent."""
    if math.isinf(p):
        return 1.0
    if p == 1:
        return math.inf
    return p / (p - 1)


@dataclass(frozen=True)
class StrichartzExponents:
    """Exponents ``r = s = 2 sigma + 2``, ``q`` admissible with ``r``, and ``k``.

    They satisfy ``1/r' = 1/r + 2 sigma/s`` and ``1/q' = 1/q + 2 sigma/k``.
    """

    q: float
    r: float
    s: float
    k: float
    sigma: float
    n: int

    @property
    def delta(self) -> float:
        return self.n * (0.5 - 1.0 / self.r)

    def space_defect(self) -> float:
        return abs(1 / _conj(self.r) - (1 / self.r + 2 * self.sigma / self.s))

    def time_defect(self) -> float:
        return abs(1 / _conj(self.q) - (1 / self.q + 2 * self.sigma / self.k))


def strichartz_exponents(sigma: float, n: int) -> StrichartzExponents:
    """Exponents with ``k = 2 sigma (2 sigma + 2) / (2 - (n - 2) sigma)``.

    >>> e = strichartz_exponents(2.0, 1)
    >>> e.r, e.q, e.k
    (6.0, 6.0, 6.0)
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if n >= 3 and not sigma < 2.0 / (n - 2):
        raise ValueError(f"sigma={sigma} violates sigma < 2/(n-2) = {2.0 / (n - 2):g}")
    r = 2 * sigma + 2
    pair = AdmissiblePair.from_r(r, n)
    k = 2 * sigma * (2 * sigma + 2) / (2 - (n - 2) * sigma)
    out = StrichartzExponents(q=pair.q, r=r, s=r, k=k, sigma=sigma, n=n)
    worst = max(out.space_defect(), out.time_defect())
    if worst > _IDENTITY_TOL:
        raise ArithmeticError(f"exponent identities fail by {worst:.3e}")
    return out


class BootstrapViolation(ValueError):
    """A hypothesis of the bootstrap lemma fails; ``condition`` names which."""

    def __init__(self, condition: str, lhs: float, rhs: float):
        self.condition = condition
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(f"bootstrap hypothesis '{condition}' violated: {lhs:.6g} vs {rhs:.6g}")


def bootstrap_bound(a: float, b: float, theta: float, M0: float) -> float:
    """Bound ``theta a / (theta - 1)`` for continuous ``M`` with ``M <= a + b M^theta``.

    Requires ``a < (1 - 1/theta)(theta b)^{-1/(theta-1)}`` and
    ``M0 <= (theta b)^{-1/(theta-1)}``; otherwise :class:`BootstrapViolation`.
    """
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not theta > 1:
        raise ValueError("theta must exceed 1")
    cap = (theta * b) ** (-1.0 / (theta - 1))
    a_max = (1 - 1 / theta) * cap
    if not a < a_max:
        raise BootstrapViolation("a < (1 - 1/theta) (theta b)^(-1/(theta-1))", a, a_max)
    if not M0 <= cap:
        raise BootstrapViolation("M0 <= (theta b)^(-1/(theta-1))", M0, cap)
    return theta * a / (theta - 1)


@dataclass(frozen=True)
class BlowupClass:
    verdict: str
    A: float
    B: float
    p0: float
    omega: float

    @property
    def margin(self) -> float:
        """``B - omega |p0| - A``; positive exactly when the verdict is ``both``."""
        return self.B - self.omega * abs(self.p0) - self.A


def blowup_functionals(u0: Field, omega: float, nl: NonlinearitySpec) -> tuple[float, float, float]:
    """``(A, B, p0)`` for data ``u0`` of the repulsive equation.

    ``A = |grad u0|^2/2 + lam/(sigma+1) ||u0||_{2sigma+2}^{2sigma+2}``,
    ``B = -omega^2 ||x u0||^2 / 2`` and ``p0 = Im int conj(u0) x . grad u0``.
    """
    A = 0.5 * gradient_norm(u0) ** 2 + nl.lam / (nl.sigma + 1) * nonlinear_integral(u0, nl.sigma)
    B = -0.5 * omega**2 * moment_norm(u0) ** 2
    return A, B, momentum(u0)


def _verdict(A: float, B: float, p0: float, omega: float) -> str:
    if A < B - omega * abs(p0):
        return "both"
    if A < B:
        if p0 == 0:
            return "both"
        return "future" if p0 < 0 else "past"
    return "inconclusive"


def blowup_classifier(u0: Field, omega: float, nl: NonlinearitySpec, strict: bool = True) -> BlowupClass:
    """Sufficient-condition test for finite-time blow-up under the repulsive potential.

    The conditions are only proven sufficient for ``lam < 0`` and ``sigma >= 2/n``;
    ``strict`` rejects other nonlinearities.  With ``strict=False`` the same
    inequalities are evaluated anyway, which for ``lam >= 0`` always yields
    ``inconclusive`` since then ``A >= 0 > B``.
    """
    n = u0.grid.n
    if strict:
        if not nl.lam < 0:
            raise ValueError("blow-up conditions need a focusing nonlinearity (lam < 0)")
        if nl.sigma < 2.0 / n - 1e-15:
            raise ValueError(f"blow-up conditions need sigma >= 2/n = {2.0 / n:g}")
    if omega < 0:
        raise ValueError("omega must be non-negative")
    A, B, p0 = blowup_functionals(u0, omega, nl)
    return BlowupClass(_verdict(A, B, p0, omega), A, B, p0, omega)


def blowup_time_map(T: float, omega: float, direction: str) -> float:
    """Blow-up time under ``V = +-omega^2|x|^2/2`` of critical data blowing up at ``T`` freely.

    ``confining``: ``arctan(omega T)/omega``.  ``repulsive``:
    ``artanh(omega T)/omega`` when ``omega T < 1``, else :data:`GLOBAL`.
    """
    if not T > 0 or not omega > 0:
        raise ValueError("T and omega must be positive")
    wT = omega * T
    if direction == "confining":
        return math.atan(wT) / omega
    if direction == "repulsive":
        if wT >= 1:
            return GLOBAL
        return math.atanh(wT) / omega
    raise ValueError(f"direction must be 'confining' or 'repulsive', got {direction!r}")


def inverse_blowup_time_map(t: float, omega: float, direction: str) -> float:
    """Free blow-up time ``T`` mapped to ``t`` by :func:`blowup_time_map`."""
    if not t > 0 or not omega > 0:
        raise ValueError("t and omega must be positive")
    if direction == "confining":
        if not omega * t < math.pi / 2:
            raise ValueError("confining blow-up times lie below pi/(2 omega)")
        return math.tan(omega * t) / omega
    if direction == "repulsive":
        return math.tanh(omega * t) / omega
    raise ValueError(f"direction must be 'confining' or 'repulsive', got {direction!r}")


def _tanh_ratio(omega_star: float, T_star: float) -> float:
    """``tanh(omega_* T_*) / omega_*``, continuous at ``omega_* = 0``."""
    x = omega_star * T_star
    if abs(x) < 1e-8:
        return T_star * (1 - x * x / 3)
    return math.tanh(x) / omega_star


def omega_threshold(omega_star: float, T_star: float) -> float:
    """``omega_* / tanh(omega_* T_*)`` (``1/T_*`` at ``omega_* = 0``)."""
    if not T_star > 0:
        raise ValueError("T_star must be positive")
    if omega_star < 0:
        raise ValueError("omega_star must be non-negative")
    return 1.0 / _tanh_ratio(omega_star, T_star)


def threshold_blowup_time(omega: float, omega_star: float, T_star: float) -> float:
    """Blow-up time at frequency ``omega`` of data blowing up at ``T_*`` under ``omega_*``.

    ``(1/omega) artanh(omega tanh(omega_* T_*)/omega_*)`` below the threshold,
    :data:`GLOBAL` at or above it.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    arg = omega * _tanh_ratio(omega_star, T_star)
    if arg >= 1:
        return GLOBAL
    return math.atanh(arg) / omega
