import math

import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varops.errors import DimensionError, ParameterError, SizeError
from varops.grid import make_grid
from varops.variation import (
    LONG,
    SHORT,
    VariationFamily,
    default_ladder,
    dyadic_ladder,
    extrema_prune,
    geometric_ladder,
    long_short_bound,
    long_short_split,
    make_ladder,
    split_interval,
    vector_vq_field,
    vq_exact,
    vq_field,
    vq_oracle,
    vq_pruned,
)

sequences = st.lists(
    st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=1, max_size=10
)
exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0])


@pytest.mark.parametrize(
    "samples, q, expected",
    [
        ([5, 5, 5, 5], 3.0, 0.0),
        ([0, 1, 3], 2.0, 3.0),
        ([0, 1, 0, 1], 2.0, math.sqrt(3.0)),
        ([0, 1, 0, 1], 1.0, 3.0),
        ([4.0], 2.0, 0.0),
    ],
)
def test_vq_exact_values(samples, q, expected):
    assert vq_exact(samples, q) == pytest.approx(expected, rel=1e-12, abs=1e-12)
    assert vq_oracle(samples, q) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_vq_errors():
    with pytest.raises(ParameterError):
        vq_exact([0.0, 1.0], 0.5)
    with pytest.raises(ParameterError):
        vq_exact([], 2.0)
    with pytest.raises(SizeError):
        vq_oracle(np.arange(15.0), 2.0)


def test_oracle_matches_on_example():
    a = [2.0, -1.0, 4.0, 0.0]
    assert vq_exact(a, 2.0) == pytest.approx(vq_oracle(a, 2.0), rel=1e-12)


@settings(deadline=None, max_examples=60)
@given(sequences, exponents)
def test_dynamic_program_matches_oracle(samples, q):
    exact, oracle = vq_exact(samples, q), vq_oracle(samples, q)
    assert abs(exact - oracle) <= 1e-12 * (1 + oracle)


@settings(deadline=None, max_examples=60)
@given(sequences, exponents)
def test_pruning_is_exact(samples, q):
    full = vq_exact(samples, q)
    assert abs(vq_pruned(samples, q) - full) <= 1e-12 * (1 + full)


@settings(deadline=None, max_examples=40)
@given(sequences, st.floats(min_value=-3, max_value=3, allow_nan=False))
def test_invariant_under_constants(samples, c):
    a = np.asarray(samples)
    assert vq_exact(a + c, 2.0) == pytest.approx(vq_exact(a, 2.0), rel=1e-12, abs=1e-12)


@settings(deadline=None, max_examples=40)
@given(sequences)
def test_monotone_in_q(samples):
    assert vq_exact(samples, 3.0) <= vq_exact(samples, 2.0) * (1 + 1e-12) + 1e-12
    assert vq_exact(samples, 2.0) <= vq_exact(samples, 1.0) * (1 + 1e-12) + 1e-12


@settings(deadline=None, max_examples=40)
@given(sequences, sequences)
def test_subadditive(a, b):
    m = min(len(a), len(b))
    a, b = np.asarray(a[:m]), np.asarray(b[:m])
    assert vq_exact(a + b, 2.0) <= vq_exact(a, 2.0) + vq_exact(b, 2.0) + 1e-12


@settings(deadline=None, max_examples=40)
@given(sequences, st.floats(min_value=-5, max_value=5, allow_nan=False))
def test_adding_a_sample_never_decreases(samples, extra):
    longer = list(samples) + [extra]
    assert vq_exact(longer, 2.0) >= vq_exact(samples, 2.0) * (1 - 1e-12)


@pytest.mark.parametrize(
    "samples, expected",
    [([0, 1, 2, 3], [0, 3]), ([7, 7, 7], [0, 2]), ([0, 2, 1, 3], [0, 1, 2, 3])],
)
def test_extrema_prune(samples, expected):
    np.testing.assert_array_equal(extrema_prune(samples), expected)


def test_ladder_validation():
    with pytest.raises(ParameterError):
        make_ladder([])
    with pytest.raises(ParameterError):
        make_ladder([1.0, 1.0])
    with pytest.raises(ParameterError):
        make_ladder([-1.0, 1.0])


def test_geometric_ladder_rungs():
    ladder = geometric_ladder(1.0, 4.0, per_octave=2)
    np.testing.assert_allclose(ladder.t_values, [1.0, 2**0.5, 2.0, 2**1.5, 4.0])
    dense = geometric_ladder(1.0, 4.0, per_octave=4)
    assert set(ladder.t_values) <= set(dense.t_values)


def test_default_ladder_spans_grid():
    grid = make_grid(1, 64, length=8.0)
    ladder = default_ladder(grid)
    assert ladder.t_values[0] == grid.h
    assert ladder.t_values[-1] == pytest.approx(grid.length)
    assert len(ladder) == 8 * 6 + 1


def test_vq_field_pointwise():
    grid = make_grid(1, 2, h=1.0)
    ladder = make_ladder([1.0, 2.0, 3.0, 4.0])
    samples = jnp.asarray([[0.0, 1.0, 0.0, 1.0], [2.0, 2.0, 2.0, 2.0]])
    fam = VariationFamily(grid=grid, ladder=ladder, samples=samples)
    v = np.asarray(vq_field(fam, 2.0).values)
    np.testing.assert_allclose(v, [math.sqrt(3.0), 0.0], rtol=1e-12)
    scaled = np.asarray(vq_field(-3.0 * fam, 2.0).values)
    np.testing.assert_allclose(scaled, 3.0 * v, rtol=1e-12)


def test_vector_vq_field():
    grid = make_grid(1, 1, h=1.0)
    ladder = make_ladder([1.0, 2.0])
    a = VariationFamily(grid=grid, ladder=ladder, samples=jnp.asarray([[0.0, 1.0]]))
    b = VariationFamily(grid=grid, ladder=ladder, samples=jnp.asarray([[0.0, 2.0]]))
    v = vector_vq_field([a, b], 2.0, 2.0)
    assert float(v.values[0]) == pytest.approx(math.sqrt(5.0), rel=1e-12)
    single = vector_vq_field([a], 2.0, 2.0)
    np.testing.assert_array_equal(single.values, vq_field(a, 2.0).values)
    other = VariationFamily(grid=grid, ladder=make_ladder([1.0, 3.0]), samples=a.samples)
    with pytest.raises(DimensionError):
        vector_vq_field([a, other], 2.0, 2.0)
    with pytest.raises(ParameterError):
        vector_vq_field([a], 2.0, 1.0)


def test_split_interval_cases():
    assert split_interval(3.0, 5.0) == (
        (3.0, 4.0, SHORT, 1),
        (4.0, 5.0, SHORT, 2),
    )
    (piece,) = split_interval(0.5, 0.9)
    assert piece.label == SHORT and piece.block == -1
    pieces = split_interval(3.0, 17.0)
    assert [(p.start, p.end, p.label) for p in pieces] == [
        (3.0, 4.0, SHORT),
        (4.0, 16.0, LONG),
        (16.0, 17.0, SHORT),
    ]


def test_long_short_split_covers_partition():
    ladder = dyadic_ladder(-1, 5, per_octave=3)
    partition = [0, 4, 5, 11, len(ladder) - 1]
    split = long_short_split(ladder, partition)
    t = ladder.t_values
    total = sum(t[b] - t[a] for a, b in zip(partition, partition[1:]))
    assert sum(i.length for i in split.intervals) == pytest.approx(total)
    for piece in split.long:
        assert math.frexp(piece.start)[0] == 0.5 and math.frexp(piece.end)[0] == 0.5
    for piece in split.short:
        assert 2.0**piece.block <= piece.start and piece.end <= 2.0 ** (piece.block + 1)
    with pytest.raises(ParameterError):
        long_short_split(ladder, [3, 1])


@settings(deadline=None, max_examples=30)
@given(st.lists(st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=13, max_size=13))
def test_long_short_bound(samples):
    ladder = dyadic_ladder(0, 3, per_octave=4)
    v, long, short = long_short_bound(samples, ladder, 2.0)
    assert v <= 3 ** 0.5 * math.sqrt(long**2 + short**2) * (1 + 1e-12) + 1e-12


def test_long_short_needs_dyadic_rungs():
    ladder = make_ladder([1.5, 3.0, 6.0])
    with pytest.raises(ParameterError):
        long_short_bound([0.0, 1.0, 0.0], ladder, 2.0)
