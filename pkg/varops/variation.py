"""q-variation of finite sample families and the long/short interval split."""
import itertools
import math
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence, Tuple

import chex
import jax
import jax.numpy as jnp
import numpy as np
from flax import struct

from varops.errors import DimensionError, ParameterError, SizeError
from varops.grid import Grid, GridFunction, check_same_grid, lrho_norm

ORACLE_MAX_SAMPLES = 14
LONG, SHORT = "long", "short"


@struct.dataclass
class TruncationLadder:
    t_values: Tuple[float, ...] = struct.field(pytree_node=False)

    @property
    def array(self) -> chex.Array:
        return jnp.asarray(self.t_values, dtype=jnp.float64)

    def __len__(self) -> int:
        return len(self.t_values)

    def scaled(self, r: float) -> "TruncationLadder":
        return make_ladder([r * t for t in self.t_values])


def make_ladder(values: Sequence[float]) -> TruncationLadder:
    values = tuple(float(t) for t in values)
    if len(values) == 0:
        raise ParameterError("A truncation ladder needs at least one rung.")
    if not all(t > 0 for t in values):
        raise ParameterError("Ladder rungs must be positive.")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ParameterError("Ladder rungs must be strictly increasing.")
    return TruncationLadder(t_values=values)


def geometric_ladder(t_min: float, t_max: float, per_octave: int = 8) -> TruncationLadder:
    """t_k = t_min * 2^(k / per_octave) for all rungs not above t_max."""
    if per_octave < 1:
        raise ParameterError("At least one rung per octave is needed.")
    count = int(math.floor(per_octave * math.log2(t_max / t_min) + 1e-9)) + 1
    exponents = np.arange(count) / per_octave
    return make_ladder(t_min * 2.0**exponents)


def default_ladder(grid: Grid, per_octave: int = 8) -> TruncationLadder:
    """Geometric ladder spanning [h, n * h]."""
    return geometric_ladder(grid.h, grid.length, per_octave)


def dyadic_ladder(k_min: int, k_max: int, per_octave: int = 8) -> TruncationLadder:
    """Geometric ladder on [2^k_min, 2^k_max] with every power of 2 a rung."""
    return geometric_ladder(2.0**k_min, 2.0**k_max, per_octave)


@struct.dataclass
class VariationFamily:
    grid: Grid = struct.field(pytree_node=False)
    ladder: TruncationLadder = struct.field(pytree_node=False)
    samples: chex.Array  # (n^d, m)

    def __add__(self, other: "VariationFamily") -> "VariationFamily":
        _check_compatible(self, other)
        return self.replace(samples=self.samples + other.samples)

    def __mul__(self, c: float) -> "VariationFamily":
        return self.replace(samples=self.samples * c)

    __rmul__ = __mul__

    def at(self, index: int) -> chex.Array:
        """Samples a_{t_1}, ..., a_{t_m} at one flat grid index."""
        return self.samples[index]


def _check_compatible(a: VariationFamily, b: VariationFamily) -> None:
    check_same_grid(a.grid, b.grid)
    if a.ladder != b.ladder:
        raise DimensionError("Variation families use different ladders.")


def _check_q(q: float) -> None:
    if not q >= 1:
        raise ParameterError(f"v_q needs q >= 1, got q={q}.")


def _abs_pow(x: chex.Array, q: float) -> chex.Array:
    """|x|^q as exp(q log|x|), exactly zero where x vanishes."""
    ax = jnp.abs(x)
    safe = jnp.where(ax > 0, ax, 1.0)
    return jnp.where(ax > 0, jnp.exp(q * jnp.log(safe)), 0.0)


def _root(s: chex.Array, q: float) -> chex.Array:
    safe = jnp.where(s > 0, s, 1.0)
    return jnp.where(s > 0, jnp.exp(jnp.log(safe) / q), 0.0)


@jax.jit
def _vq_power(a: chex.Array, q: float) -> chex.Array:
    """max over increasing index chains of sum |a_i - a_j|^q.

    best[i] is the largest q-power sum of a chain ending at index i.
    """
    m = a.shape[0]
    idx = jnp.arange(m)

    def body(i, best):
        cand = jnp.where(idx < i, _abs_pow(a[i] - a, q) + best, 0.0)
        return best.at[i].set(jnp.max(cand))

    best = jax.lax.fori_loop(1, m, body, jnp.zeros_like(a))
    return jnp.max(best)


_vq_power_rows = jax.jit(jax.vmap(_vq_power, in_axes=(0, None)))


def vq_exact(samples: Sequence[float], q: float) -> float:
    """Exact q-variation of a finite family by dynamic programming, O(m^2)."""
    _check_q(q)
    a = jnp.asarray(np.asarray(samples, dtype=np.float64))
    if a.ndim != 1 or a.size == 0:
        raise ParameterError("vq_exact needs a non-empty 1d sample sequence.")
    return float(_root(_vq_power(a, q), q))


@lru_cache(maxsize=None)
def _chain_predecessors(m: int) -> np.ndarray:
    """For every index subset (bit mask, ascending) the previous chosen index.

    Entry [s, i] is -1 unless i is chosen in subset s and some j < i is too.
    """
    table = -np.ones((2**m, m), dtype=np.int64)
    for s in range(2**m):
        prev = -1
        for i in range(m):
            if s >> i & 1:
                table[s, i] = prev
                prev = i
    return table


def vq_oracle(samples: Sequence[float], q: float) -> float:
    """Brute-force q-variation over all 2^m index subsets (m <= 14).

    Subsets are visited in increasing bit-mask order; each chain sum is
    accumulated left to right in index order.
    """
    _check_q(q)
    a = np.asarray(samples, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise ParameterError("vq_oracle needs a non-empty 1d sample sequence.")
    m = a.size
    if m > ORACLE_MAX_SAMPLES:
        raise SizeError(f"vq_oracle handles at most {ORACLE_MAX_SAMPLES} samples, got {m}.")
    prev = _chain_predecessors(m)
    total = np.zeros(prev.shape[0])
    for i in range(m):
        has_prev = prev[:, i] >= 0
        diff = np.abs(a[i] - a[np.where(has_prev, prev[:, i], i)])
        safe = np.where(diff > 0, diff, 1.0)
        total += np.where(has_prev & (diff > 0), np.exp(q * np.log(safe)), 0.0)
    best = total.max()
    return float(np.exp(np.log(best) / q)) if best > 0 else 0.0


def extrema_prune(samples: Sequence[float]) -> np.ndarray:
    """First index, last index and the turning points of the sequence.

    Runs of equal values are represented by their first index, so plateau
    peaks survive.
    """
    a = np.asarray(samples, dtype=np.float64)
    m = a.size
    if m == 0:
        raise ParameterError("extrema_prune needs at least one sample.")
    reps = [0] + [i for i in range(1, m) if a[i] != a[i - 1]]
    keep = {0, reps[-1], m - 1}
    for prev, cur, nxt in zip(reps, reps[1:], reps[2:]):
        if (a[cur] - a[prev]) * (a[nxt] - a[cur]) < 0:
            keep.add(cur)
    return np.array(sorted(keep), dtype=np.int64)


def vq_pruned(samples: Sequence[float], q: float) -> float:
    a = np.asarray(samples, dtype=np.float64)
    return vq_exact(a[extrema_prune(a)], q)


def vq_field(fam: VariationFamily, q: float) -> GridFunction:
    """Pointwise q-variation of a family, as a function on its grid."""
    _check_q(q)
    v = _root(_vq_power_rows(fam.samples, q), q)
    return GridFunction(grid=fam.grid, values=v.reshape(fam.grid.shape))


def vector_vq_field(
    fams: Sequence[VariationFamily], q: float, rho: float
) -> GridFunction:
    """(sum_n (V_q of component n)^rho)^(1/rho) at every grid point."""
    if len(fams) == 0:
        raise ParameterError("vector_vq_field needs at least one family.")
    if not 1 < rho < math.inf:
        raise ParameterError(f"rho must lie in (1, inf), got {rho}.")
    for other in fams[1:]:
        _check_compatible(fams[0], other)
    fields = jnp.stack([vq_field(fam, q).values for fam in fams])
    return GridFunction(grid=fams[0].grid, values=lrho_norm(fields, rho))


class Interval(NamedTuple):
    start: float
    end: float
    label: str
    block: Optional[int]

    @property
    def length(self) -> float:
        return self.end - self.start


@struct.dataclass
class IntervalClass:
    intervals: Tuple[Interval, ...] = struct.field(pytree_node=False)

    @property
    def long(self) -> Tuple[Interval, ...]:
        return tuple(i for i in self.intervals if i.label == LONG)

    @property
    def short(self) -> Tuple[Interval, ...]:
        return tuple(i for i in self.intervals if i.label == SHORT)


def _is_power_of_two(t: float) -> bool:
    return math.frexp(t)[0] == 0.5


def _block_of(t: float) -> int:
    """k with 2^k < t <= 2^(k+1)."""
    mant, e = math.frexp(t)
    return e - 2 if mant == 0.5 else e - 1


def split_interval(s: float, t: float) -> Tuple[Interval, ...]:
    """Cut (s, t] at its smallest and largest powers of 2."""
    m = math.frexp(s)[1]  # smallest power 2^m > s
    n = math.frexp(t)[1] - 1  # largest power 2^n <= t
    if m > n:
        return (Interval(s, t, SHORT, _block_of(t)),)
    lo, hi = 2.0**m, 2.0**n
    pieces = [Interval(s, lo, SHORT, _block_of(lo))]
    if m < n:
        pieces.append(Interval(lo, hi, LONG, None))
    if t > hi:
        pieces.append(Interval(hi, t, SHORT, _block_of(t)))
    return tuple(pieces)


def long_short_split(
    ladder: TruncationLadder, partition: Sequence[int]
) -> IntervalClass:
    """Split consecutive partition intervals into long and short pieces."""
    partition = [int(i) for i in partition]
    if any(i < 0 or i >= len(ladder) for i in partition):
        raise ParameterError("Partition indices must lie inside the ladder.")
    if any(b <= a for a, b in zip(partition, partition[1:])):
        raise ParameterError("Partition indices must be strictly increasing.")
    t = ladder.t_values
    pieces = itertools.chain.from_iterable(
        split_interval(t[a], t[b]) for a, b in zip(partition, partition[1:])
    )
    return IntervalClass(intervals=tuple(pieces))


def _dyadic_rungs(ladder: TruncationLadder) -> np.ndarray:
    t = ladder.t_values
    rungs = [i for i, v in enumerate(t) if _is_power_of_two(v)]
    lo, hi = math.frexp(t[0])[1] - 1, math.frexp(t[-1])[1] - 1
    expected = [k for k in range(lo, hi + 1) if t[0] <= 2.0**k <= t[-1]]
    if len(rungs) != len(expected):
        raise ParameterError(
            "Every power of 2 inside the ladder range must be a rung; "
            "build the ladder with dyadic_ladder."
        )
    return np.array(rungs, dtype=np.int64)


def long_variation(samples: Sequence[float], ladder: TruncationLadder, q: float) -> float:
    """q-variation over the rungs that are powers of 2."""
    a = np.asarray(samples, dtype=np.float64)
    rungs = _dyadic_rungs(ladder)
    if rungs.size == 0:
        return 0.0
    return vq_exact(a[rungs], q)


def short_variation(samples: Sequence[float], ladder: TruncationLadder, q: float) -> float:
    """(sum_k V_q(samples on [2^k, 2^(k+1)])^q)^(1/q)."""
    _check_q(q)
    a = np.asarray(samples, dtype=np.float64)
    _dyadic_rungs(ladder)
    t = ladder.t_values
    blocks = {}
    for i, v in enumerate(t):
        blocks.setdefault(_block_of(v), []).append(i)
        if _is_power_of_two(v):
            # left endpoint of the next block
            blocks.setdefault(_block_of(v) + 1, []).append(i)
    total = sum(vq_exact(a[sorted(idx)], q) ** q for idx in blocks.values())
    return total ** (1.0 / q)


def long_short_bound(
    samples: Sequence[float], ladder: TruncationLadder, q: float
) -> Tuple[float, float, float]:
    """(V_q, long, short); the split gives V_q <= 3^(1-1/q) (L^q + S^q)^(1/q)."""
    if len(samples) != len(ladder):
        raise DimensionError("One sample per ladder rung is required.")
    return (
        vq_exact(samples, q),
        long_variation(samples, ladder, q),
        short_variation(samples, ladder, q),
    )
