import jax
import numpy as np
import pytest

from varops.czd import (
    DyadicCube,
    aol_check,
    cz_decompose,
    cz_decompose_vector,
    czd_to_json,
    dyadic_maximal_exact,
    random_aol_instance,
    verify_czd,
    verify_vector_czd,
)
from varops.errors import DimensionError, LevelTooLowError, ParameterError
from varops.grid import grid_function, make_grid, stack_functions
from varops.maximal import dyadic_maximal


def _sparse_function(grid, seed, density=0.2):
    key_mask, key_val = jax.random.split(jax.random.PRNGKey(seed))
    mask = jax.random.bernoulli(key_mask, density, grid.shape)
    return grid_function(grid, 10 * jax.random.normal(key_val, grid.shape) * mask)


def test_single_spike_example():
    grid = make_grid(1, 8, h=1.0)
    f = grid_function(grid, [0.0, 0.0, 0.0, 16.0, 0.0, 0.0, 0.0, 0.0])
    dec = cz_decompose(f, 3.0)
    assert dec.cubes == (DyadicCube(g=2, corner=(0,)),)
    np.testing.assert_array_equal(np.asarray(dec.good.values), [4, 4, 4, 4, 0, 0, 0, 0])
    np.testing.assert_array_equal(dec.bad_values[0], [-4.0, -4.0, -4.0, 12.0])
    assert np.abs(dec.bad_values[0]).mean() == 6.0
    np.testing.assert_array_equal(dec.omega, [True] * 4 + [False] * 4)
    report = verify_czd(dec, f)
    assert report.passed
    assert report.checks["good_bound"].margin == pytest.approx(2.0)
    assert report.checks["bad_average"].margin == pytest.approx(6.0)
    assert czd_to_json(dec, report)["cubes"] == [{"g": 2, "corner": [0]}]


def test_no_cubes_when_level_is_high():
    grid = make_grid(1, 8, h=1.0)
    f = grid_function(grid, np.linspace(-1.0, 1.0, 8))
    dec = cz_decompose(f, 5.0)
    assert dec.cubes == ()
    report = verify_czd(dec, f)
    assert report.checks["cube_averages"].passed
    assert report.checks["maximal"].passed
    np.testing.assert_array_equal(np.asarray(dec.good.values), np.asarray(f.values))
    assert not dec.bad().any()
    assert verify_czd(dec, f).passed


def test_level_errors():
    grid = make_grid(1, 8, h=1.0)
    f = grid_function(grid, np.ones(8))
    with pytest.raises(LevelTooLowError):
        cz_decompose(f, 0.5)
    with pytest.raises(ParameterError):
        cz_decompose(f, 0.0)


@pytest.mark.parametrize("seed", range(10))
def test_random_decompositions_pass(seed, dimension):
    grid = make_grid(dimension, 32 if dimension == 1 else 16, h=1.0)
    f = _sparse_function(grid, seed)
    root = float(np.abs(np.asarray(f.values)).mean())
    dec = cz_decompose(f, max(root, 1e-3) * (1.5 + seed / 2))
    report = verify_czd(dec, f)
    assert report.passed, report.failures()
    for cube in dec.cubes:
        assert dec.omega[cube.slices()].all()
        assert dec.omega_tilde[cube.slices()].all()


def test_dyadic_maximal_agrees_with_lattice_maximal(dimension):
    grid = make_grid(dimension, 16, h=1.0)
    f = _sparse_function(grid, 3)
    np.testing.assert_allclose(
        dyadic_maximal_exact(np.asarray(f.values), dimension),
        np.asarray(dyadic_maximal(f).values),
        rtol=1e-12,
        atol=1e-12,
    )


def test_dilate_is_clipped():
    cube = DyadicCube(g=1, corner=(0,))
    assert cube.dilate_slices(3.0, 8) == (slice(0, 4),)
    assert cube.parent() == DyadicCube(g=2, corner=(0,))


def test_vector_decomposition(dimension):
    grid = make_grid(dimension, 16, h=1.0)
    seq = stack_functions([_sparse_function(grid, s) for s in range(3)])
    phi = np.asarray(seq.pointwise_norm(2.0).values)
    dec = cz_decompose_vector(seq, 2.0 * max(phi.mean(), 1e-3), 2.0)
    report = verify_vector_czd(dec, seq)
    assert report.passed, report.failures()
    with pytest.raises(ParameterError):
        cz_decompose_vector(seq, 1.0, 1.0)


def test_vector_decomposition_of_one_component():
    grid = make_grid(1, 16, h=1.0)
    f = _sparse_function(grid, 5)
    lam = 2.0 * max(float(np.abs(np.asarray(f.values)).mean()), 1e-3)
    scalar = cz_decompose(f, lam)
    vector = cz_decompose_vector(stack_functions([f]), lam, 2.0)
    assert vector.cubes == scalar.cubes
    np.testing.assert_allclose(
        np.asarray(vector.good.components[0]), np.asarray(scalar.good.values), atol=1e-12
    )


def test_aol_single_pair():
    report = aol_check([[1.0]], [1.0], [1.0], 2.0, [1.0])
    assert report.hypothesis_holds and report.passed
    assert report.lhs == report.rhs == 1.0


def test_aol_zero_pieces():
    report = aol_check(np.zeros((2, 3)), [1.0, 2.0, 0.5], np.ones(4), 3.0, np.zeros(2))
    assert report.passed
    assert report.lhs == 0.0 and report.rhs == pytest.approx(64 * 3.5)


def test_aol_hypothesis_failure():
    report = aol_check([[2.0]], [1.0], [1.0], 2.0, [2.0])
    assert not report.hypothesis_holds
    assert report.conclusion_holds is None
    assert not report.passed


def test_aol_errors():
    with pytest.raises(ParameterError):
        aol_check([[1.0]], [1.0], [1.0], 1.0, [1.0])
    with pytest.raises(ParameterError):
        aol_check([[-1.0]], [1.0], [1.0], 2.0, [1.0])
    with pytest.raises(DimensionError):
        aol_check([[1.0, 1.0]], [1.0], [1.0], 2.0, [1.0])


@pytest.mark.parametrize("r", [1.5, 2.0, 3.0])
def test_aol_random_saturated_instances(r):
    for seed in range(10):
        inst = random_aol_instance(jax.random.PRNGKey(seed), 4, 3, dim=4, r=r)
        report = aol_check(inst.h_norms, inst.delta, inst.omega, r, inst.group_norms)
        assert report.hypothesis_holds
        assert report.passed


def test_random_aol_instance_norms():
    inst = random_aol_instance(jax.random.PRNGKey(4), 3, 2, dim=4, r=2.0)
    assert inst.vectors.shape == (3, 2, 4)
    offset = np.arange(3)[:, None] - np.arange(2)[None, :] + 1
    expected = inst.omega[offset] * np.sqrt(inst.delta)[None, :]
    np.testing.assert_allclose(inst.h_norms, expected, rtol=1e-12)
