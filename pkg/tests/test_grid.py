import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qnls.grid import (
    ChirpedGaussian,
    Field,
    gradient_norm,
    l2_norm,
    lp_norm,
    make_grid,
    moment_norm,
    norms,
    out_of_box_fraction,
    resample,
    sample_gaussian,
    sigma_norm,
    spectral_gradient,
    sup_norm,
)

from conftest import random_smooth_field


def test_make_grid_small():
    g = make_grid(1, 16, 8)
    assert g.dx == 1.0
    assert g.x[0] == -8.0 and g.x[-1] == 7.0
    assert len(g.x) == 16


def test_make_grid_2d():
    g = make_grid(2, 32, 10)
    assert g.size == 1024
    assert g.dx == 0.625
    assert g.shape == (32, 32)


@pytest.mark.parametrize("args", [(1, 17, 8), (1, 8, 8), (4, 16, 1), (0, 16, 1), (1, 16, 0), (1, 16, -2)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_wavenumbers_symmetric_up_to_nyquist():
    g = make_grid(1, 64, 5.0)
    xi = np.sort(g.xi)
    assert xi[0] == pytest.approx(-g.nyquist)
    np.testing.assert_allclose(xi[1:], -xi[1:][::-1], atol=1e-12)
    assert np.allclose(np.diff(xi), math.pi / g.L)


def test_field_rejects_nonfinite_and_bad_size():
    g = make_grid(1, 16, 1.0)
    with pytest.raises(ValueError):
        g.field(np.full(16, np.nan))
    with pytest.raises(ValueError):
        Field(g, np.zeros(15))
    f = Field(g, np.full(16, np.inf, dtype=complex), diverged=True)
    assert not f.is_finite()


def test_field_is_immutable():
    g = make_grid(1, 16, 1.0)
    f = g.zeros()
    with pytest.raises(ValueError):
        f.values[0] = 1


def test_gaussian_symmetry(grid1024):
    f = sample_gaussian(grid1024, ChirpedGaussian())
    x = grid1024.x
    i0 = int(np.argmin(np.abs(x)))
    assert f.values[i0] == pytest.approx(1.0)
    # x[k] and x[m-k] are mirror images
    np.testing.assert_allclose(f.values[1:], f.values[1:][::-1], atol=1e-15)


def test_gaussian_chirp_phase(grid1024):
    f0 = sample_gaussian(grid1024, ChirpedGaussian())
    f2 = sample_gaussian(grid1024, ChirpedGaussian(chirp=2.0))
    np.testing.assert_allclose(np.abs(f2.values), np.abs(f0.values), rtol=1e-14)
    x = grid1024.x
    i0, i1 = int(np.argmin(np.abs(x))), int(np.argmin(np.abs(x - 1)))
    assert x[i1] == 1.0
    assert np.angle(f2.values[i1]) - np.angle(f2.values[i0]) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n,m", [(1, 1024), (2, 256)])
def test_gaussian_mass(n, m):
    g = make_grid(n, m, 16.0)
    A, a = 1.3, 1.0
    f = sample_gaussian(g, ChirpedGaussian(A, a))
    assert l2_norm(f) ** 2 == pytest.approx(A**2 * (a * math.sqrt(math.pi)) ** n, rel=1e-10)


def test_gaussian_boundary_warning(caplog):
    g = make_grid(1, 64, 3.0)
    sample_gaussian(g, ChirpedGaussian(width=1.0))
    assert "box-supported" in caplog.text


def test_gradient_plane_wave():
    g = make_grid(1, 64, math.pi)
    k0 = 5.0
    f = g.field(np.exp(1j * k0 * g.x))
    (d,) = spectral_gradient(f)
    np.testing.assert_allclose(d.values, 1j * k0 * f.values, atol=1e-12)


def test_gradient_plane_wave_product_2d():
    g = make_grid(2, 32, math.pi)
    X, Y = g.coords
    f = g.field(np.exp(1j * (3 * X - 2 * Y)))
    dx, dy = spectral_gradient(f)
    np.testing.assert_allclose(dx.values, 3j * f.values, atol=1e-12)
    np.testing.assert_allclose(dy.values, -2j * f.values, atol=1e-12)


def test_gradient_gaussian(grid1024):
    f = sample_gaussian(grid1024, ChirpedGaussian())
    (d,) = spectral_gradient(f)
    x = grid1024.x
    assert np.max(np.abs(d.values + x * np.exp(-x**2 / 2))) < 1e-8


def test_gradient_constant():
    g = make_grid(1, 32, 2.0)
    (d,) = spectral_gradient(g.field(np.full(32, 2.5 - 1j)))
    assert np.max(np.abs(d.values)) < 1e-14


def test_gaussian_norms(grid1024):
    f = sample_gaussian(grid1024, ChirpedGaussian())
    nm = norms(f, p=4)
    assert nm.l2**2 == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert nm.weighted**2 == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
    assert nm.gradient**2 == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
    assert nm.lp**4 == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
    assert nm.linf == pytest.approx(1.0)
    assert nm.sigma == pytest.approx(nm.l2 + nm.gradient + nm.weighted)
    assert sigma_norm(f) == nm.sigma


def test_zero_field_norms():
    g = make_grid(1, 32, 2.0)
    nm = norms(g.zeros(), p=3)
    assert (nm.l2, nm.lp, nm.linf, nm.weighted, nm.gradient, nm.sigma) == (0, 0, 0, 0, 0, 0)


def test_lp_rejects_small_p(grid1024):
    with pytest.raises(ValueError):
        lp_norm(grid1024.zeros(), 0.5)


def test_lp_inf_is_sup(grid1024, rng):
    f = random_smooth_field(grid1024, rng)
    assert lp_norm(f, math.inf) == sup_norm(f)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_parseval(seed):
    g = make_grid(1, 256, 12.0)
    f = random_smooth_field(g, np.random.default_rng(seed))
    spec = np.fft.fft(f.values)
    spectral = math.sqrt(np.sum(np.abs(spec) ** 2) / g.m * g.dx)
    assert l2_norm(f) == pytest.approx(spectral, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    re=st.floats(-5, 5),
    im=st.floats(-5, 5),
)
def test_norms_homogeneous(seed, re, im):
    g = make_grid(1, 256, 12.0)
    f = random_smooth_field(g, np.random.default_rng(seed))
    c = complex(re, im)
    a, b = norms(f, p=3), norms(f * c, p=3)
    for name in ("l2", "lp", "linf", "weighted", "gradient", "sigma"):
        assert getattr(b, name) == pytest.approx(abs(c) * getattr(a, name), rel=1e-12, abs=1e-300)


def test_resample_identity(grid1024, rng):
    f = random_smooth_field(grid1024, rng)
    assert np.max(np.abs(resample(f, 1.0).values - f.values)) < 1e-12


def test_resample_gaussian_widens():
    g = make_grid(1, 1024, 16.0)
    f = sample_gaussian(g, ChirpedGaussian(width=1.0))
    out = resample(f, 2.0)
    exact = np.exp(-g.x**2 / 8)
    assert np.max(np.abs(out.values - exact)) < 1e-6


def test_resample_plane_wave_halves_wavenumber():
    g = make_grid(1, 256, math.pi)
    f = g.field(np.exp(4j * g.x))
    out = resample(f, 2.0)
    inside = np.abs(g.x / 2) < g.L
    np.testing.assert_allclose(out.values[inside], np.exp(2j * g.x[inside]), atol=1e-6)


def test_resample_shrinking_out_of_box():
    g = make_grid(1, 64, 4.0)
    assert out_of_box_fraction(g, 1.5) == 0.0
    assert out_of_box_fraction(g, 0.75) == pytest.approx(0.25, abs=2 / 64)
    f = sample_gaussian(g, ChirpedGaussian(width=0.5))
    out = resample(f, 0.75)
    assert np.all(out.values[np.abs(g.x) / 0.75 > g.L] == 0)
    with pytest.raises(ValueError):
        resample(f, 0.3)


def test_resample_2d_separable():
    g = make_grid(2, 128, 8.0)
    f = sample_gaussian(g, ChirpedGaussian(width=0.8))
    out = resample(f, 1.5)
    exact = np.exp(-g.r2 / (2 * (0.8 * 1.5) ** 2))
    assert np.max(np.abs(out.values - exact)) < 1e-6


def test_gradient_norm_matches_physical(grid1024, rng):
    f = random_smooth_field(grid1024, rng)
    (d,) = spectral_gradient(f)
    assert gradient_norm(f) == pytest.approx(l2_norm(d), rel=1e-12)
    assert moment_norm(f) == pytest.approx(l2_norm(f.like(grid1024.x * f.values)), rel=1e-12)
