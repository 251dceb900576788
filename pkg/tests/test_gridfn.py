import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailcalc.gridfn import (
    GridError,
    GridFunction,
    GridFunctionND,
    biconjugate,
    build_grid_function,
    build_grid_function_nd,
    conjugate_nd,
    conjugate_values,
    conjugate_values_nd,
    fenchel_conjugate,
    finite_difference_hessian,
    grid_tolerance,
    radial_conjugate,
    symmetric_grid,
    young_gap,
)


def test_quadratic_is_self_conjugate():
    f = build_grid_function("quadratic", symmetric_grid(10, 2001))
    y = np.linspace(-3, 3, 61)
    assert np.allclose(conjugate_values(f, y), y**2 / 2, atol=1e-12)


def test_abs_conjugate_is_indicator_of_unit_interval():
    f = build_grid_function("abs", symmetric_grid(10, 201))
    vals = conjugate_values(f, [-2.0, -1.0, 0.0, 1.0, 2.0])
    # past slope 1 the grid sup is attained at the edge: (|y| - 1) * 10
    assert np.allclose(vals, [10.0, 0.0, 0.0, 0.0, 10.0])


def test_power_conjugate_matches_closed_form():
    # |x|^3/3 has conjugate (2/3)|y|^{3/2}
    f = build_grid_function("power", symmetric_grid(6, 4001), m=3.0)
    y = np.linspace(-4, 4, 41)
    assert np.allclose(conjugate_values(f, y), (2 / 3) * np.abs(y) ** 1.5, atol=1e-6)


def test_nonconvex_biconjugate_is_convex_minorant():
    f = build_grid_function("neg_quadratic", symmetric_grid(1, 201))
    assert np.allclose(biconjugate(f).values, -1.0, atol=1e-12)
    dw = build_grid_function("double_well", symmetric_grid(2, 401))
    g = biconjugate(dw)
    inside = np.abs(g.grid) <= 1
    assert np.allclose(g.values[inside], 0.0, atol=1e-9)


def test_merge_and_brute_force_agree(rng):
    x = np.sort(rng.uniform(-3, 3, 300))
    v = np.cosh(x)
    fc = GridFunction(x, v)
    y = np.linspace(-5, 5, 97)
    brute = np.max(y[:, None] * x[None, :] - v[None, :], axis=1)
    assert np.allclose(conjugate_values(fc, y), brute, atol=1e-12)


def test_argmax_tie_goes_to_smallest_abscissa():
    f = GridFunction(np.array([-1.0, 0.0, 1.0]), np.zeros(3))
    _, arg = conjugate_values(f, [0.0], return_argmax=True)
    assert arg[0] == -1.0


def test_young_gap_value():
    # f = |x|^3/3, lam=1, u=1, gamma=2: 8/3 + (2/3)(1/2)^{3/2} - 1
    f = build_grid_function("power", symmetric_grid(6, 4001), m=3.0)
    expected = 8 / 3 + (2 / 3) * 0.5**1.5 - 1
    assert young_gap(f, 1.0, 1.0, 2.0) == pytest.approx(expected, abs=1e-5)
    assert expected == pytest.approx(1.90237, abs=1e-5)


@given(st.floats(-3, 3), st.floats(-2, 2), st.floats(0.2, 2.0))
def test_young_gap_nonnegative(lam, u, gamma):
    f = build_grid_function("power", symmetric_grid(8, 2001), m=3.0)
    assert young_gap(f, lam, u, gamma) >= -1e-9


def test_radial_conjugate_rejects_negative_profile_grid():
    with pytest.raises(GridError):
        radial_conjugate(GridFunction(np.array([-1.0, 0.0, 1.0]), np.zeros(3)), 2)


def test_json_and_csv_round_trip():
    f = GridFunction(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.1, np.inf]), "inf")
    assert np.array_equal(GridFunction.from_json(f.to_json()).values, f.values)
    g = GridFunction(np.array([0.0, 0.1, 0.3]), np.array([1 / 3, 2 / 7, 0.123456789012345]))
    h = GridFunction.from_csv(g.to_csv())
    assert np.array_equal(h.values, g.values) and np.array_equal(h.grid, g.grid)


def test_nd_conjugate_of_diagonal_quadratic():
    ax = symmetric_grid(6, 241)
    f = build_grid_function_nd(lambda p: 0.5 * (p[:, 0] ** 2 + 4 * p[:, 1] ** 2), (ax, ax))
    dual = (np.linspace(-2, 2, 21), np.linspace(-2, 2, 21))
    g = conjugate_nd(f, dual)
    pts = g.points()
    assert np.allclose(g.values.ravel(), 0.5 * (pts[:, 0] ** 2 + pts[:, 1] ** 2 / 4), atol=1e-12)
    assert np.allclose(conjugate_values_nd(f, pts), g.values.ravel(), atol=1e-12)


def test_nd_json_round_trip_and_hessian():
    ax = symmetric_grid(2, 21)
    f = build_grid_function_nd(lambda p: (p**2).sum(1), (ax, ax))
    assert np.array_equal(GridFunctionND.from_json(f.to_json()).values, f.values)
    H = finite_difference_hessian(lambda x: float((x**2).sum()), np.zeros(2))
    assert np.allclose(H, 2 * np.eye(2), atol=1e-6)


@given(st.floats(0.2, 5.0), st.floats(-1.0, 1.0))
def test_fenchel_young_inequality(a, y0):
    # f(x) + f*(y) >= xy on the grid
    f = build_grid_function(lambda x: a * x**2 + 0.1 * np.abs(x) ** 3, symmetric_grid(4, 401))
    y = np.linspace(-3, 3, 31) + y0
    fs = conjugate_values(f, y)
    assert np.all(f.values[:, None] + fs[None, :] >= f.grid[:, None] * y[None, :] - 1e-9)


@given(st.lists(st.floats(-5, 5), min_size=5, max_size=40))
def test_biconjugate_is_below_and_convex(vals):
    x = np.linspace(-1, 1, len(vals))
    f = GridFunction(x, np.array(vals))
    g = biconjugate(f)
    assert np.all(g.values <= f.values + 1e-9)
    assert g.is_convex(1e-8)


@given(st.floats(0.5, 4.0))
def test_biconjugate_within_grid_tolerance_for_convex(m):
    f = build_grid_function(lambda x: np.abs(x) ** (1 + m) / (1 + m), symmetric_grid(3, 301))
    g = biconjugate(f)
    assert np.max(np.abs(g.values - f.values)) <= grid_tolerance(f)


@given(st.floats(0.1, 3.0))
def test_conjugate_scaling(c):
    # (c f)^*(y) = c f^*(y / c)
    f = build_grid_function("quadratic", symmetric_grid(8, 801))
    cf = GridFunction(f.grid, c * f.values)
    y = np.linspace(-2, 2, 21)
    assert np.allclose(conjugate_values(cf, y), c * conjugate_values(f, y / c), atol=1e-9)


def test_fenchel_conjugate_returns_grid_function():
    f = build_grid_function("quadratic", symmetric_grid(4, 81))
    g = fenchel_conjugate(f, np.linspace(-1, 1, 11))
    assert isinstance(g, GridFunction) and g.grid.size == 11
