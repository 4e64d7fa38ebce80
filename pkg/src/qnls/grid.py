"""Periodic spatial lattice, complex fields and spectral calculus.

The box is ``[-L, L)^n`` sampled with ``m`` points per axis, ``x_k = -L + k*dx``.
Wavenumbers are the standard discrete Fourier frequencies scaled by ``pi/L``,
i.e. ``xi in {-m/2, ..., m/2 - 1} * pi / L``, stored in FFT order.  Every module
uses these through :class:`Grid`; nothing else builds its own frequencies.

Integrals are Riemann sums with weight ``dx**n``, which is spectrally accurate
for smooth fields that are negligible at the box boundary.  Moments such as
``||x f||`` use the lattice coordinate itself, not a periodic distance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "Grid",
    "Field",
    "ChirpedGaussian",
    "Norms",
    "make_grid",
    "sample_gaussian",
    "spectral_gradient",
    "norms",
    "l2_norm",
    "lp_norm",
    "sup_norm",
    "moment_norm",
    "gradient_norm",
    "sigma_norm",
    "inner",
    "resample",
    "out_of_box_fraction",
]

_RESAMPLE_CHUNK = 512


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on ``[-L, L)^n``.

    Use :func:`make_grid` to construct one with validation.
    """

    n: int
    m: int
    L: float

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.m

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m,) * self.n

    @property
    def size(self) -> int:
        return self.m**self.n

    @property
    def cell(self) -> float:
        """Quadrature weight ``dx**n``."""
        return self.dx**self.n

    @cached_property
    def x(self) -> np.ndarray:
        """1D lattice coordinates shared by every axis."""
        return -self.L + self.dx * np.arange(self.m)

    @cached_property
    def xi(self) -> np.ndarray:
        """1D wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.m, d=self.dx)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        return tuple(_axis_view(self.x, j, self.n) for j in range(self.n))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(_axis_view(self.xi, j, self.n) for j in range(self.n))

    @cached_property
    def r2(self) -> np.ndarray:
        """``|x|^2`` on the full lattice."""
        out = np.zeros(self.shape)
        for c in self.coords:
            out = out + c**2
        return out

    @cached_property
    def xi2(self) -> np.ndarray:
        """``|xi|^2`` on the full spectral lattice."""
        out = np.zeros(self.shape)
        for k in self.wavenumbers:
            out = out + k**2
        return out

    @property
    def nyquist(self) -> float:
        return math.pi / self.dx

    def field(self, values) -> "Field":
        return Field(self, np.asarray(values, dtype=complex).reshape(self.shape))

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.shape, dtype=complex))


def _axis_view(a: np.ndarray, axis: int, n: int) -> np.ndarray:
    shape = [1] * n
    shape[axis] = a.size
    return a.reshape(shape)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a wavefunction on a :class:`Grid`.

    ``values`` has shape ``grid.shape`` (row-major) and is made read-only.
    ``diverged`` marks a state produced by a failed step; such fields are
    allowed to hold non-finite values.
    """

    grid: Grid
    values: np.ndarray
    diverged: bool = field(default=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            if vals.size != self.grid.size:
                raise ValueError(
                    f"field has {vals.size} values, grid needs {self.grid.size}"
                )
            vals = vals.reshape(self.grid.shape)
        if not vals.flags.owndata or vals.flags.writeable:
            vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if not self.diverged and not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")

    def like(self, values) -> "Field":
        """New field on the same grid."""
        return Field(self.grid, values)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other: "Field") -> "Field":
        return self.like(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return self.like(self.values - other.values)

    def __mul__(self, c) -> "Field":
        return self.like(self.values * c)

    __rmul__ = __mul__

    def conj(self) -> "Field":
        return self.like(np.conj(self.values))


@dataclass(frozen=True)
class ChirpedGaussian:
    """``A exp(-|x-x0|^2/(2a^2)) exp(i b |x-x0|^2 / 2)``."""

    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, ...] | float = 0.0
    chirp: float = 0.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if not self.width > 0:
            raise ValueError("width must be positive")


def make_grid(n: int, m: int, L: float) -> Grid:
    """Validated :class:`Grid` constructor.

    >>> g = make_grid(1, 16, 8.0)
    >>> g.dx, g.x[0], g.x[-1]
    (1.0, -8.0, 7.0)
    """
    if n not in (1, 2, 3):
        raise ValueError(f"invalid dimension n={n}; expected 1, 2 or 3")
    if not isinstance(m, (int, np.integer)) or m < 16 or (m & (m - 1)) != 0:
        raise ValueError(f"m={m} must be a power of two >= 16")
    if not L > 0:
        raise ValueError(f"half-width L={L} must be positive")
    return Grid(int(n), int(m), float(L))


def sample_gaussian(grid: Grid, g: ChirpedGaussian) -> Field:
    center = np.broadcast_to(np.asarray(g.center, dtype=float), (grid.n,))
    d2 = np.zeros(grid.shape)
    for c, x0 in zip(grid.coords, center):
        d2 = d2 + (c - x0) ** 2
    vals = g.amplitude * np.exp(-d2 / (2 * g.width**2) + 0.5j * g.chirp * d2)
    edge = _boundary_amplitude(vals)
    if edge > 1e-10 * g.amplitude:
        logger.warning(
            "gaussian not box-supported: boundary amplitude %.3e (A=%.3g)",
            edge,
            g.amplitude,
        )
    return Field(grid, vals)


def _boundary_amplitude(vals: np.ndarray) -> float:
    edge = 0.0
    for ax in range(vals.ndim):
        edge = max(edge, float(np.abs(np.take(vals, 0, axis=ax)).max()))
    return edge


def fft(f: Field) -> np.ndarray:
    return np.fft.fftn(f.values)


def ifft(grid: Grid, spec: np.ndarray) -> Field:
    return Field(grid, np.fft.ifftn(spec))


def spectral_gradient(f: Field) -> list[Field]:
    """Components ``d_j f`` computed as ``ifft(i xi_j fft(f))``."""
    spec = np.fft.fftn(f.values)
    return [
        Field(f.grid, np.fft.ifftn(1j * k * spec), diverged=f.diverged)
        for k in f.grid.wavenumbers
    ]


def inner(f: Field, g: Field) -> complex:
    """``int conj(f) g dx``."""
    return complex(np.vdot(f.values, g.values) * f.grid.cell)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell))


def lp_norm(f: Field, p: float) -> float:
    if p < 1:
        raise ValueError(f"p={p} < 1 is not a norm")
    if math.isinf(p):
        return sup_norm(f)
    return float((np.sum(np.abs(f.values) ** p) * f.grid.cell) ** (1.0 / p))


def sup_norm(f: Field) -> float:
    return float(np.abs(f.values).max())


def moment_norm(f: Field) -> float:
    """``||x f||_{L^2}``."""
    return float(np.sqrt(np.sum(f.grid.r2 * np.abs(f.values) ** 2) * f.grid.cell))


def gradient_norm(f: Field) -> float:
    """``||grad f||_{L^2}``, evaluated on the spectral side (Parseval)."""
    spec = np.fft.fftn(f.values)
    total = np.sum(f.grid.xi2 * np.abs(spec) ** 2) / f.grid.size
    return float(np.sqrt(total * f.grid.cell))


def sigma_norm(f: Field) -> float:
    return l2_norm(f) + gradient_norm(f) + moment_norm(f)


@dataclass(frozen=True)
class Norms:
    l2: float
    lp: float
    p: float
    linf: float
    weighted: float
    gradient: float
    sigma: float


def norms(f: Field, p: float = 2.0) -> Norms:
    """All grid norms of ``f`` at once; ``lp`` is the ``L^p`` norm for the given ``p``."""
    l2 = l2_norm(f)
    grad = gradient_norm(f)
    w = moment_norm(f)
    return Norms(
        l2=l2,
        lp=lp_norm(f, p),
        p=p,
        linf=sup_norm(f),
        weighted=w,
        gradient=grad,
        sigma=l2 + grad + w,
    )


def out_of_box_fraction(grid: Grid, scale: float) -> float:
    """Fraction of lattice points whose preimage ``x/scale`` leaves ``[-L, L)^n``."""
    inside = np.abs(grid.x / scale) <= grid.L
    inside &= grid.x / scale < grid.L
    frac_1d = inside.mean()
    return float(1.0 - frac_1d**grid.n)


def resample(f: Field, scale: float) -> Field:
    """Band-limited interpolation of ``f`` at the points ``x / scale``.

    The trigonometric interpolant of the samples is evaluated exactly at the
    stretched points, axis by axis.  Points whose preimage leaves the box are
    set to zero.  More than half of the lattice outside raises ``ValueError``.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    grid = f.grid
    if scale == 1.0:
        return f.like(f.values)
    frac = out_of_box_fraction(grid, scale)
    if frac > 0.5:
        raise ValueError(f"{100 * frac:.1f}% of resampled points fall outside the box")
    if frac > 0:
        logger.debug("resample: %.2f%% of points outside box set to zero", 100 * frac)

    targets = grid.x / scale
    inside = (targets >= -grid.L) & (targets < grid.L)
    rel = targets - grid.x[0]
    xi = grid.xi
    nyq = grid.m // 2

    vals = f.values
    for ax in range(grid.n):
        coef = np.fft.fft(vals, axis=ax) / grid.m
        coef = np.moveaxis(coef, ax, 0).reshape(grid.m, -1)
        res = np.zeros_like(coef)
        for start in range(0, grid.m, _RESAMPLE_CHUNK):
            sl = slice(start, start + _RESAMPLE_CHUNK)
            basis = np.exp(1j * np.outer(rel[sl], xi))
            # split the Nyquist mode symmetrically so real data stays real
            basis[:, nyq] = np.cos(xi[nyq] * rel[sl])
            res[sl] = basis @ coef
        res[~inside] = 0.0
        shape = (grid.m,) + tuple(np.delete(np.array(vals.shape), ax))
        vals = np.moveaxis(res.reshape(shape), 0, ax)
    return f.like(vals)
