import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinflow.grid import TorusGrid, band_limited_field, philox


def test_derivative_of_single_mode_is_exact():
    g = TorusGrid((32, 16), (2.0, 0.5))
    x, y = g.coords()
    f = np.sin(2 * np.pi * 3 * x / 2.0) * np.cos(2 * np.pi * 2 * y / 0.5)
    fx = (2 * np.pi * 3 / 2.0) * np.cos(2 * np.pi * 3 * x / 2.0) * np.cos(2 * np.pi * 2 * y / 0.5)
    assert np.max(np.abs(g.diff(f, 0) - fx)) < 1e-12
    lap = -((2 * np.pi * 3 / 2.0) ** 2 + (2 * np.pi * 2 / 0.5) ** 2) * f
    assert np.max(np.abs(g.laplacian(f) - lap)) < 1e-10


@settings(max_examples=25, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2 ** 32), kmax=st.integers(1, 5))
def test_laplacian_is_trace_of_hessian(seed, kmax):
    g = TorusGrid.cube(24, 2, 1.3)
    f = band_limited_field(g, philox(seed), kmax)
    h = g.hessian(f)
    assert np.max(np.abs(h[..., 0, 0] + h[..., 1, 1] - g.laplacian(f))) < 1e-9


@settings(max_examples=25, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2 ** 32))
def test_shifted_derivative_matches_explicit_phase(seed):
    g = TorusGrid.cube(32, 2)
    a = band_limited_field(g, philox(seed), 3, real=False, components=1)[..., 0]
    # d/dx (e^{i pi x} a) = e^{i pi x} (a_x + i pi a)
    expected = g.diff(a, 0) + 1j * np.pi * a
    assert np.max(np.abs(g.diff(a, 0, shift=0.5) - expected)) < 1e-10


def test_quadrature_exact_for_trig_polynomials():
    g = TorusGrid.cube(16, 2, 3.0)
    x, y = g.coords()
    assert g.integrate(np.cos(2 * np.pi * x / 3.0) ** 2) == pytest.approx(4.5, abs=1e-13)
    assert g.volume == pytest.approx(9.0)


def test_philox_streams_are_reproducible_and_distinct():
    a = philox(7).standard_normal(5)
    b = philox(7).standard_normal(5)
    c = philox(7, stream=1).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_band_limited_field_amplitude_and_band():
    g = TorusGrid.cube(32, 2)
    f = band_limited_field(g, philox(3), 2, amplitude=0.7)
    assert np.max(np.abs(f)) == pytest.approx(0.7)
    spec = np.abs(np.fft.fftn(f))
    k = np.fft.fftfreq(32, 1 / 32)
    kk = np.maximum(np.abs(k)[:, None], np.abs(k)[None, :])
    assert np.max(spec[kk > 2]) < 1e-10


def test_grid_validation():
    with pytest.raises(ValueError):
        TorusGrid((1, 4))
    with pytest.raises(ValueError):
        TorusGrid((4, 4), (1.0,))
    with pytest.raises(ValueError):
        TorusGrid.cube(8, 2).check(np.zeros((8, 4)))
