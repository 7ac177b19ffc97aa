"""Maximal functions over grid-aligned cubes.

Cubes have side lengths that are whole numbers of cells. With the
"uncentered" convention every window position is admissible, with the
"dyadic" convention only the cells of the dyadic lattice are.
"""
from functools import partial
from typing import Callable, Iterator, Sequence, Tuple

import chex
import jax
import jax.numpy as jnp
from jax import lax
from flax import struct

from varops.errors import DimensionError, ParameterError
from varops.grid import Grid, GridFunction

CONVENTIONS = ("uncentered", "dyadic")


@struct.dataclass
class CubeFamily:
    lengths: Tuple[int, ...] = struct.field(pytree_node=False)  # in cells
    convention: str = struct.field(pytree_node=False)

    def side_lengths(self, grid: Grid) -> Tuple[float, ...]:
        return tuple(L * grid.h for L in self.lengths)


def make_cube_family(lengths: Sequence[int], convention: str = "uncentered") -> CubeFamily:
    lengths = tuple(sorted(int(L) for L in lengths))
    if convention not in CONVENTIONS:
        raise ParameterError(f"Unknown cube convention {convention}.")
    if len(lengths) == 0 or lengths[0] < 1:
        raise ParameterError("Cube side lengths must be positive cell counts.")
    if convention == "dyadic" and any(L & (L - 1) for L in lengths):
        raise ParameterError("Dyadic cubes need power-of-2 side lengths.")
    return CubeFamily(lengths=lengths, convention=convention)


def dyadic_cubes(grid: Grid, convention: str = "uncentered") -> CubeFamily:
    """Side lengths h * 2^g for g = 0 .. log2(n)."""
    return make_cube_family([2**g for g in range(grid.levels + 1)], convention)


def all_windows(grid: Grid) -> CubeFamily:
    """Every side length 1 .. n at every position."""
    return make_cube_family(range(1, grid.n + 1), "uncentered")


def cube_family_from_spec(grid: Grid, spec: dict) -> CubeFamily:
    convention = spec.get("convention", "uncentered")
    lengths = spec.get("lengths", "dyadic")
    if lengths == "dyadic":
        return dyadic_cubes(grid, convention)
    if lengths == "all":
        return make_cube_family(range(1, grid.n + 1), convention)
    return make_cube_family(lengths, convention)


def _slice(x, start, stop, axis):
    return lax.slice_in_dim(x, start, stop, axis=axis)


@partial(jax.jit, static_argnums=(1,))
def window_means(values: chex.Array, L: int) -> chex.Array:
    """Averages over every L^d window, shape (n - L + 1,)^d, by prefix sums."""
    out = values
    for axis in range(values.ndim):
        pad = [(0, 0)] * values.ndim
        pad[axis] = (1, 0)
        c = jnp.pad(jnp.cumsum(out, axis=axis), pad)
        size = c.shape[axis]
        out = _slice(c, L, size, axis) - _slice(c, 0, size - L, axis)
    return out / L**values.ndim


@partial(jax.jit, static_argnums=(1,))
def _windows(values: chex.Array, L: int) -> chex.Array:
    """Every L^d window, shape (n - L + 1,)^d + (L^d,)."""
    span = values.shape[0] - L + 1
    s = jnp.arange(span)[:, None] + jnp.arange(L)[None, :]
    if values.ndim == 1:
        return values[s]
    patches = values[s[:, None, :, None], s[None, :, None, :]]
    return patches.reshape(span, span, L * L)


def _blocks(values: chex.Array, L: int) -> chex.Array:
    """Dyadic blocks of side L, shape (n / L,)^d + (L^d,)."""
    b = values.shape[0] // L
    if values.ndim == 1:
        return values.reshape(b, L)
    return values.reshape(b, L, b, L).transpose(0, 2, 1, 3).reshape(b, b, L * L)


def _unblock(block_values: chex.Array, L: int) -> chex.Array:
    out = block_values
    for axis in range(block_values.ndim):
        out = jnp.repeat(out, L, axis=axis)
    return out


@partial(jax.jit, static_argnums=(1,))
def cover_max(window_values: chex.Array, L: int) -> chex.Array:
    """At every point, the max over the side-L windows that contain it."""
    out = window_values
    ndim = out.ndim
    for axis in range(ndim):
        pad = [(0, 0)] * ndim
        pad[axis] = (L - 1, L - 1)
        padded = jnp.pad(out, pad, constant_values=-jnp.inf)
        dims = [1] * ndim
        dims[axis] = L
        out = lax.reduce_window(padded, -jnp.inf, lax.max, tuple(dims), (1,) * ndim, "VALID")
    return out


def _mean_deviation(x: chex.Array) -> chex.Array:
    return jnp.mean(jnp.abs(x - jnp.mean(x, axis=-1, keepdims=True)), axis=-1)


def cube_statistics(
    values: chex.Array,
    fam: CubeFamily,
    stat: Callable[[chex.Array], chex.Array],
    window_stat: Callable[[chex.Array, int], chex.Array] = None,
) -> Iterator[Tuple[int, chex.Array]]:
    """(L, statistic of every admissible side-L cube) for L > 1 in the family.

    `stat` reduces the last axis of a stack of cubes; `window_stat`, when
    given, computes the uncentered windows directly.
    """
    n = values.shape[0]
    for L in fam.lengths:
        if L > n:
            raise DimensionError(f"Cube side {L} exceeds the grid size {n}.")
        if L == 1:
            continue
        if fam.convention == "dyadic":
            yield L, stat(_blocks(values, L))
        elif window_stat is not None:
            yield L, window_stat(values, L)
        else:
            yield L, stat(_windows(values, L))


def _sup_over_cubes(values, fam, single, stat, window_stat=None) -> chex.Array:
    result = single
    for L, cube_vals in cube_statistics(values, fam, stat, window_stat):
        if fam.convention == "dyadic":
            cover = _unblock(cube_vals, L)
        else:
            cover = cover_max(cube_vals, L)
        result = jnp.maximum(result, cover)
    return result


def hl_maximal(f: GridFunction, fam: CubeFamily) -> GridFunction:
    """sup over admissible cubes containing x of the average of |f|."""
    a = jnp.abs(f.values)
    m = _sup_over_cubes(a, fam, a, partial(jnp.mean, axis=-1), window_means)
    return f.replace(values=m)


def dyadic_maximal(f: GridFunction) -> GridFunction:
    return hl_maximal(f, dyadic_cubes(f.grid, "dyadic"))


def mr_maximal(f: GridFunction, r: float, fam: CubeFamily) -> GridFunction:
    """M_r f = M(|f|^r)^(1/r)."""
    if not r > 1:
        raise ParameterError(f"M_r needs r > 1, got r={r}; use hl_maximal for r = 1.")
    m = hl_maximal(f.replace(values=jnp.abs(f.values) ** r), fam)
    return m.replace(values=m.values ** (1.0 / r))


def sharp_maximal(f: GridFunction, fam: CubeFamily) -> GridFunction:
    """sup over admissible cubes containing x of the mean |f - f_Q| over Q."""
    v = f.values
    s = _sup_over_cubes(v, fam, jnp.zeros_like(v), _mean_deviation)
    return f.replace(values=s)


def bmo_seminorm(f: GridFunction, fam: CubeFamily) -> float:
    return float(jnp.max(sharp_maximal(f, fam).values))
