import jax
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varops.errors import DimensionError, ParameterError
from varops.grid import constant, grid_function, make_grid
from varops.maximal import (
    all_windows,
    bmo_seminorm,
    cube_family_from_spec,
    dyadic_cubes,
    dyadic_maximal,
    hl_maximal,
    make_cube_family,
    mr_maximal,
    sharp_maximal,
)
from varops.utils import test_helpers


def test_cube_family_validation():
    with pytest.raises(ParameterError):
        make_cube_family([3], "dyadic")
    with pytest.raises(ParameterError):
        make_cube_family([0])
    with pytest.raises(ParameterError):
        make_cube_family([1], "centred")
    grid = make_grid(1, 8, h=0.5)
    assert dyadic_cubes(grid).lengths == (1, 2, 4, 8)
    assert dyadic_cubes(grid).side_lengths(grid) == (0.5, 1.0, 2.0, 4.0)
    assert cube_family_from_spec(grid, {"lengths": "all"}) == all_windows(grid)


def test_hl_maximal_window_example():
    grid = make_grid(1, 4, h=1.0)
    f = grid_function(grid, [0.0, 0.0, 8.0, 0.0])
    m = hl_maximal(f, dyadic_cubes(grid))
    assert float(m.values[0]) == pytest.approx(2.0, rel=1e-14)
    mr = mr_maximal(f, 2.0, dyadic_cubes(grid))
    assert float(mr.values[0]) == pytest.approx(4.0, rel=1e-14)


def test_constants(dimension):
    grid = make_grid(dimension, 8, h=1.0)
    fam = dyadic_cubes(grid)
    c = constant(grid, -3.0)
    test_helpers.assert_close(hl_maximal(c, fam).values, 3.0)
    test_helpers.assert_close(mr_maximal(c, 1.5, fam).values, 3.0)
    test_helpers.assert_close(sharp_maximal(c, fam).values, 0.0, atol=1e-14)
    assert bmo_seminorm(c, fam) <= 1e-14


@settings(deadline=None, max_examples=25)
@given(st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=16, max_size=16))
def test_matches_window_scan(values):
    grid = make_grid(1, 16, h=1.0)
    f = grid_function(grid, values)
    for fam in (dyadic_cubes(grid), all_windows(grid)):
        test_helpers.assert_close(
            hl_maximal(f, fam).values,
            test_helpers.window_scan_maximal(values, fam.lengths),
            atol=1e-11,
        )
        test_helpers.assert_close(
            sharp_maximal(f, fam).values,
            test_helpers.window_scan_sharp(values, fam.lengths),
            atol=1e-11,
        )


signals = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=16, max_size=16
)


@settings(deadline=None, max_examples=25)
@given(signals, signals)
def test_maximal_is_sublinear(a, b):
    grid = make_grid(1, 16, h=1.0)
    f, g = grid_function(grid, a), grid_function(grid, b)
    for fam in (dyadic_cubes(grid), all_windows(grid)):
        lhs = np.asarray(hl_maximal(f + g, fam).values)
        rhs = np.asarray(hl_maximal(f, fam).values) + np.asarray(hl_maximal(g, fam).values)
        assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-12)


@settings(deadline=None, max_examples=25)
@given(signals, st.floats(min_value=-100, max_value=100))
def test_maximal_is_homogeneous(a, c):
    grid = make_grid(1, 16, h=1.0)
    fam = dyadic_cubes(grid)
    m = np.asarray(hl_maximal(grid_function(grid, a), fam).values)
    scaled = np.asarray(hl_maximal(grid_function(grid, c * np.asarray(a)), fam).values)
    np.testing.assert_allclose(scaled, abs(c) * m, rtol=1e-12, atol=1e-12)

def test_pointwise_relations(dimension):
    grid = make_grid(dimension, 8, h=1.0)
    f = grid_function(grid, jax.random.normal(jax.random.PRNGKey(0), grid.shape))
    fam = dyadic_cubes(grid)
    m = np.asarray(hl_maximal(f, fam).values)
    assert np.all(m >= np.abs(np.asarray(f.values)) - 1e-14)
    assert np.all(np.asarray(mr_maximal(f, 2.0, fam).values) >= m - 1e-12)
    assert np.all(np.asarray(sharp_maximal(f, fam).values) <= 2 * m + 1e-12)
    with pytest.raises(ParameterError):
        mr_maximal(f, 1.0, fam)


def test_dyadic_lattice_is_smaller():
    grid = make_grid(1, 16, h=1.0)
    f = grid_function(grid, jax.random.exponential(jax.random.PRNGKey(1), (16,)))
    lattice = np.asarray(dyadic_maximal(f).values)
    windows = np.asarray(hl_maximal(f, dyadic_cubes(grid)).values)
    assert np.all(lattice <= windows + 1e-14)


@pytest.mark.parametrize("n", [2, 8, 32, 64])
def test_comparability_with_all_windows(n):
    grid = make_grid(1, n, h=1.0)
    f = grid_function(grid, jax.random.exponential(jax.random.PRNGKey(n), (n,)))
    lower, upper = test_helpers.comparability(
        np.asarray(hl_maximal(f, dyadic_cubes(grid)).values),
        np.asarray(hl_maximal(f, all_windows(grid)).values),
    )
    assert lower and upper


def test_sharp_two_point_example():
    grid = make_grid(1, 2, h=1.0)
    f = grid_function(grid, [0.0, 4.0])
    fam = make_cube_family([2])
    np.testing.assert_allclose(np.asarray(sharp_maximal(f, fam).values), [2.0, 2.0])
    assert bmo_seminorm(f, fam) == pytest.approx(2.0)


def test_oversized_cube_raises():
    grid = make_grid(1, 4, h=1.0)
    with pytest.raises(DimensionError):
        hl_maximal(constant(grid, 1.0), make_cube_family([8]))
