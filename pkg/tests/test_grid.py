import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bohmlab.errors import DegenerateStateError, GridMismatchError, InvalidConfigError
from bohmlab.grid import (Grid2D, UnitSystem, WaveFunction, inner_product, integrate,
                          interpolate, make_grid, make_grid_2d, normalize)


def test_well_energy_closed_form():
    u = UnitSystem(hbar=2.0, mass_m=3.0, mass_M=30.0, box_length_L=0.5)
    assert u.well_energy(3) == pytest.approx((2.0 * 3 * np.pi / 0.5) ** 2 / 6.0)


@pytest.mark.parametrize("kwargs", [dict(hbar=0.0), dict(mass_m=-1.0),
                                    dict(box_length_L=np.inf), dict(mass_m=2.0, mass_M=1.0)])
def test_unit_system_rejects_bad_constants(kwargs):
    with pytest.raises(InvalidConfigError):
        UnitSystem(**kwargs)


def test_grid_geometry():
    g = make_grid(-1.0, 3.0, 401, 1e-3)
    assert g.dx == pytest.approx(0.01)
    assert g.x[0] == -1.0 and g.x[-1] == pytest.approx(3.0)
    assert g.shape == (401,) and g.ndim == 1
    assert g.with_dt(0.5).dt == 0.5


@pytest.mark.parametrize("args", [(1.0, 0.0, 100, 0.1), (0.0, 1.0, 4, 0.1),
                                  (0.0, 1.0, 100, 0.0), (0.0, np.nan, 100, 0.1)])
def test_grid_validation(args):
    with pytest.raises(InvalidConfigError):
        make_grid(*args)


def test_trapezoid_of_sin_squared_is_exact():
    # sin^2 is periodic over the well, so the trapezoid rule is exact
    g = make_grid(0.0, 1.0, 101, 0.1)
    assert integrate(2 * np.sin(3 * np.pi * g.x) ** 2, g) == pytest.approx(1.0, abs=1e-14)


def test_2d_integral_factorises():
    gx, gX = make_grid(0.0, 1.0, 65, 0.1), make_grid(-2.0, 2.0, 81, 0.1)
    g = make_grid_2d(gx, gX)
    x, X = g.mesh()
    assert isinstance(g, Grid2D) and g.shape == (65, 81)
    f = np.sin(np.pi * x) ** 2 * (X ** 2)
    assert integrate(f, g) == pytest.approx(integrate(np.sin(np.pi * gx.x) ** 2, gx)
                                            * integrate(gX.x ** 2, gX), rel=1e-12)


def test_normalize_and_inner_product():
    g = make_grid(0.0, 1.0, 201, 0.1)
    a = normalize(WaveFunction(g, np.sin(np.pi * g.x) + 0j))
    b = normalize(WaveFunction(g, np.sin(2 * np.pi * g.x) + 0j))
    assert a.norm() == pytest.approx(1.0, abs=1e-14)
    assert abs(inner_product(a, b)) < 1e-14
    assert inner_product(a, 1j * a) == pytest.approx(1j)


def test_normalize_zero_state():
    g = make_grid(0.0, 1.0, 32, 0.1)
    with pytest.raises(DegenerateStateError):
        normalize(WaveFunction(g, np.zeros(32)))


def test_wavefunction_rejects_wrong_shape_and_nan():
    g = make_grid(0.0, 1.0, 32, 0.1)
    with pytest.raises(GridMismatchError):
        WaveFunction(g, np.zeros(31))
    with pytest.raises(ValueError):
        WaveFunction(g, np.full(32, np.nan))


def test_wavefunction_values_are_read_only():
    g = make_grid(0.0, 1.0, 32, 0.1)
    psi = WaveFunction(g, np.ones(32))
    with pytest.raises(ValueError):
        psi.values[0] = 2.0


def test_inner_product_grid_mismatch():
    a = WaveFunction(make_grid(0.0, 1.0, 32, 0.1), np.ones(32))
    b = WaveFunction(make_grid(0.0, 2.0, 32, 0.1), np.ones(32))
    with pytest.raises(GridMismatchError):
        inner_product(a, b)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.lists(st.floats(-1.5, 2.5), min_size=1, max_size=20))
def test_interpolation_reproduces_linear_functions(a, b, pts):
    g = make_grid(-1.0, 2.0, 37, 0.1)
    pts = np.array(pts)
    vals, clamped = interpolate(a * g.x + b, g, pts)
    inside = ~clamped
    assert np.allclose(vals[inside], a * pts[inside] + b, atol=1e-12)
    edge = np.clip(pts[clamped], -1.0, 2.0)
    assert np.allclose(vals[clamped], a * edge + b, atol=1e-12)


def test_bilinear_interpolation_exact_for_bilinear_field():
    g = make_grid_2d(make_grid(0.0, 1.0, 21, 0.1), make_grid(-1.0, 1.0, 41, 0.1))
    x, X = g.mesh()
    f = 1 + 2 * x - 3 * X + 4 * x * X
    pts = np.array([[0.33, 0.71], [0.9, -0.95], [0.5, 0.0]])
    vals, clamped = interpolate(f, g, pts)
    expect = 1 + 2 * pts[:, 0] - 3 * pts[:, 1] + 4 * pts[:, 0] * pts[:, 1]
    assert np.allclose(vals, expect, atol=1e-12) and not clamped.any()


def test_interpolation_propagates_nan_positions():
    g = make_grid(0.0, 1.0, 21, 0.1)
    vals, _ = interpolate(g.x, g, np.array([0.25, np.nan]))
    assert vals[0] == pytest.approx(0.25) and np.isnan(vals[1])
