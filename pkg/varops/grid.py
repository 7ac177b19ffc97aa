"""Uniform grids on R^d (d = 1, 2), sampled functions and weighted norms.

A function on a grid is understood as zero outside the grid box. Integrals
are midpoint sums with weight h^d at every sample.
"""
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import chex
import jax.numpy as jnp
import numpy as np
from flax import struct

from varops.errors import DimensionError, ParameterError


@struct.dataclass
class Grid:
    d: int = struct.field(pytree_node=False)
    n: int = struct.field(pytree_node=False)
    h: float = struct.field(pytree_node=False)
    origin: Tuple[float, ...] = struct.field(pytree_node=False)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        """Number of samples n^d."""
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def length(self) -> float:
        """Side length of the grid box."""
        return self.n * self.h

    @property
    def levels(self) -> int:
        """Number of dyadic generations above a single cell."""
        return self.n.bit_length() - 1

    def indices(self) -> np.ndarray:
        """Integer sample indices, shape (n^d, d), row-major."""
        axes = np.meshgrid(*[np.arange(self.n)] * self.d, indexing="ij")
        return np.stack([a.reshape(-1) for a in axes], axis=-1)

    def coordinates(self) -> chex.Array:
        """Sample coordinates o + i*h, shape (n^d, d), row-major."""
        idx = jnp.asarray(self.indices(), dtype=jnp.float64)
        return jnp.asarray(self.origin) + idx * self.h


def default_origin(n: int, h: float) -> float:
    """Origin that centres the box at 0 with no sample exactly at 0."""
    return -(n / 2) * h + h / 2


def make_grid(
    d: int,
    n: int,
    h: Optional[float] = None,
    length: Optional[float] = None,
    origin: Optional[Union[float, Sequence[float]]] = None,
) -> Grid:
    """Build a validated grid from either a spacing or a box length."""
    if d not in (1, 2):
        raise ParameterError(f"Only d in (1, 2) is supported, got d={d}.")
    if n < 1 or n & (n - 1):
        raise ParameterError(f"Points per axis must be a power of 2, got {n}.")
    if (h is None) == (length is None):
        raise ParameterError("Specify exactly one of `h` and `length`.")
    h = float(length) / n if h is None else float(h)
    if not h > 0:
        raise ParameterError(f"Grid spacing must be positive, got {h}.")
    if origin is None:
        origin = (default_origin(n, h),) * d
    elif np.isscalar(origin):
        origin = (float(origin),) * d
    origin = tuple(float(o) for o in origin)
    if len(origin) != d:
        raise DimensionError(f"Origin {origin} does not have {d} entries.")
    return Grid(d=d, n=n, h=h, origin=origin)


def refine(grid: Grid) -> Grid:
    """Same box, twice the points per axis."""
    return make_grid(
        grid.d,
        2 * grid.n,
        h=grid.h / 2,
        origin=tuple(o - grid.h / 4 for o in grid.origin),
    )


@struct.dataclass
class GridFunction:
    grid: Grid = struct.field(pytree_node=False)
    values: chex.Array

    @property
    def flat(self) -> chex.Array:
        return self.values.reshape(-1)

    def _other(self, other):
        if isinstance(other, GridFunction):
            check_same_grid(self.grid, other.grid)
            return other.values
        return other

    def __add__(self, other):
        return self.replace(values=self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.replace(values=self.values - self._other(other))

    def __mul__(self, other):
        return self.replace(values=self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.replace(values=-self.values)

    def __abs__(self):
        return self.replace(values=jnp.abs(self.values))


def check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise DimensionError(f"Grid mismatch: {a} vs {b}.")


def grid_function(grid: Grid, values) -> GridFunction:
    """Wrap row-major samples (flat or shaped) as a function on `grid`."""
    values = jnp.asarray(values, dtype=jnp.float64)
    if values.size != grid.size:
        raise DimensionError(
            f"Expected {grid.size} samples for {grid.shape}, got {values.size}."
        )
    if not bool(jnp.all(jnp.isfinite(values))):
        raise ParameterError("Grid function values must be finite.")
    return GridFunction(grid=grid, values=values.reshape(grid.shape))


def zeros(grid: Grid) -> GridFunction:
    return GridFunction(grid=grid, values=jnp.zeros(grid.shape))


def constant(grid: Grid, c: float) -> GridFunction:
    return GridFunction(grid=grid, values=jnp.full(grid.shape, float(c)))


def from_callable(grid: Grid, fn: Callable[[chex.Array], chex.Array]) -> GridFunction:
    """Sample `fn` (mapping (P, d) coordinates to (P,) values) on the grid."""
    return grid_function(grid, fn(grid.coordinates()))


@struct.dataclass
class SequenceGridFunction:
    grid: Grid = struct.field(pytree_node=False)
    components: chex.Array  # (N, *grid.shape)

    def __len__(self) -> int:
        return self.components.shape[0]

    def component(self, i: int) -> GridFunction:
        return GridFunction(grid=self.grid, values=self.components[i])

    def pointwise_norm(self, rho: float) -> GridFunction:
        """x -> (sum_n |f_n(x)|^rho)^(1/rho)."""
        return GridFunction(grid=self.grid, values=lrho_norm(self.components, rho))

    def __mul__(self, c: float):
        return self.replace(components=self.components * c)

    __rmul__ = __mul__


def stack_functions(functions: Sequence[GridFunction]) -> SequenceGridFunction:
    if len(functions) == 0:
        raise ParameterError("A function sequence needs at least one component.")
    grid = functions[0].grid
    for f in functions[1:]:
        check_same_grid(grid, f.grid)
    return SequenceGridFunction(
        grid=grid, components=jnp.stack([f.values for f in functions])
    )


def lrho_norm(stack: chex.Array, rho: float, axis: int = 0) -> chex.Array:
    """l^rho norm along `axis`, scaled by the largest entry.

    A single entry is returned unchanged, and identical entries give
    exactly N^(1/rho) times the entry.
    """
    a = jnp.abs(stack)
    top = jnp.max(a, axis=axis, keepdims=True)
    safe = jnp.where(top > 0, top, 1.0)
    scaled = jnp.sum((a / safe) ** rho, axis=axis, keepdims=True) ** (1.0 / rho)
    return jnp.squeeze(jnp.where(top > 0, top * scaled, 0.0), axis=axis)


def _weight_values(f: GridFunction, w) -> chex.Array:
    if w is None:
        return jnp.ones(f.grid.shape)
    base = getattr(w, "base", w)
    check_same_grid(f.grid, base.grid)
    return base.values


def lp_norm(f: GridFunction, p: float, w=None) -> float:
    """(sum_i |f_i|^p w_i h^d)^(1/p); for p = inf the maximum of |f|.

    `w` is a Weight (or a positive GridFunction); None means w = 1. The sup
    norm is unweighted, so p = inf with a non-unit weight is refused.
    """
    if not p >= 1:
        raise ParameterError(f"lp_norm needs p >= 1, got p={p}.")
    wv = _weight_values(f, w)
    a = jnp.abs(f.values)
    if math.isinf(p):
        if not bool(jnp.all(wv == 1.0)):
            raise ParameterError("lp_norm with p = inf takes no weight; pass f * w.")
        return float(jnp.max(a))
    total = jnp.sum(a**p * wv) * f.grid.cell_volume
    return float(total ** (1.0 / p))


def weighted_measure_above(f: GridFunction, w, lam: float) -> float:
    """w({|f| > lam}) as a midpoint sum."""
    if not lam > 0:
        raise ParameterError(f"Level must be positive, got {lam}.")
    wv = _weight_values(f, w)
    hit = jnp.abs(f.values) > lam
    return float(jnp.sum(jnp.where(hit, wv, 0.0)) * f.grid.cell_volume)


def weak_l1_constant(f: GridFunction, w, levels: Sequence[float]) -> float:
    """sup over the level grid of lam * w({|f| > lam})."""
    levels = jnp.asarray(np.asarray(levels, dtype=np.float64))
    if levels.size == 0:
        raise ParameterError("The level grid is empty.")
    if not bool(jnp.all(levels > 0)):
        raise ParameterError("Levels must be positive.")
    wv = _weight_values(f, w).reshape(-1)
    a = jnp.abs(f.flat)
    hit = a[None, :] > levels[:, None]
    measures = jnp.sum(jnp.where(hit, wv[None, :], 0.0), axis=1)
    return float(jnp.max(levels * measures) * f.grid.cell_volume)


def level_grid(f: GridFunction, num: int = 64, span: float = 1e3) -> np.ndarray:
    """Geometric levels spanning [max|f| / span, max|f|]."""
    top = float(jnp.max(jnp.abs(f.values)))
    if top == 0.0:
        return np.ones(1)
    return np.geomspace(top / span, top, num)


def grid_to_dict(grid: Grid) -> dict:
    return {"d": grid.d, "n": grid.n, "h": grid.h, "o": list(grid.origin)}


def grid_from_dict(obj: dict) -> Grid:
    return make_grid(obj["d"], obj["n"], h=obj["h"], origin=obj.get("o"))


def grid_function_to_dict(f: GridFunction) -> dict:
    out = grid_to_dict(f.grid)
    out["values"] = np.asarray(f.flat).tolist()
    return out


def grid_function_from_dict(obj: dict) -> GridFunction:
    return grid_function(grid_from_dict(obj), obj["values"])
