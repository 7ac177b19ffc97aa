"""Input-function batteries for the ratio experiments.

Every generator is defined in physical coordinates, so one instance can be
sampled on a grid and on its refinements.
"""
from typing import Dict, List, NamedTuple, Optional, Sequence

import chex
import jax
import jax.numpy as jnp

from varops.errors import ConfigError
from varops.grid import (
    Grid,
    GridFunction,
    SequenceGridFunction,
    from_callable,
    stack_functions,
)

BATTERY_KINDS = ("spike", "bump", "step", "cube", "constant")
STEP_PIECES = {1: 8, 2: 4}


class Instance(NamedTuple):
    instance_id: str
    seed: int
    kind: str
    index: int


def component_key(seed: int, index: int, component: int = 0) -> chex.PRNGKey:
    """Key of one component of a battery instance; scalar runs use component 0."""
    key = jax.random.fold_in(jax.random.PRNGKey(seed), index)
    return jax.random.fold_in(key, component)


def _box(grid: Grid):
    lo = jnp.asarray(grid.origin) - grid.h / 2
    return lo, grid.length


def spike(grid: Grid, key: chex.PRNGKey) -> GridFunction:
    """Narrow plateau at a random point, normalised to unit discrete L^1 norm."""
    lo, length = _box(grid)
    k_pos, k_width = jax.random.split(key)
    centre = lo + length * jax.random.uniform(k_pos, (grid.d,), minval=0.1, maxval=0.9)
    width = length * jax.random.uniform(k_width, (), minval=1 / 32, maxval=1 / 8)
    x = grid.coordinates()
    inside = jnp.all(jnp.abs(x - centre) < width / 2, axis=-1)
    nearest = jnp.argmin(jnp.sum((x - centre) ** 2, axis=-1))
    values = jnp.where(inside, 1.0, 0.0).at[nearest].set(1.0)
    values = values / (jnp.sum(values) * grid.cell_volume)
    return GridFunction(grid=grid, values=values.reshape(grid.shape))


def bump(grid: Grid, key: chex.PRNGKey) -> GridFunction:
    """Smooth compactly supported bump with a random centre, radius and height."""
    lo, length = _box(grid)
    k_pos, k_rad, k_amp = jax.random.split(key, 3)
    centre = lo + length * jax.random.uniform(k_pos, (grid.d,), minval=0.25, maxval=0.75)
    radius = length * jax.random.uniform(k_rad, (), minval=1 / 16, maxval=1 / 4)
    amplitude = 1.0 + jnp.abs(jax.random.normal(k_amp))

    def fn(x):
        s = jnp.sum((x - centre) ** 2, axis=-1) / radius**2
        safe = jnp.where(s < 1, s, 0.0)
        return jnp.where(s < 1, amplitude * jnp.exp(-1.0 / (1.0 - safe)), 0.0)

    return from_callable(grid, fn)


def step(grid: Grid, key: chex.PRNGKey) -> GridFunction:
    """Random +-1 values on equal physical sub-boxes of the grid box."""
    lo, length = _box(grid)
    pieces = STEP_PIECES[grid.d]
    signs = jnp.where(jax.random.bernoulli(key, 0.5, (pieces,) * grid.d), 1.0, -1.0)

    def fn(x):
        cell = jnp.clip(jnp.floor((x - lo) / length * pieces), 0, pieces - 1)
        cell = cell.astype(jnp.int32)
        return signs[tuple(cell[:, i] for i in range(grid.d))]

    return from_callable(grid, fn)


def cube(grid: Grid, key: chex.PRNGKey) -> GridFunction:
    """Indicator of a random dyadic sub-cube of the grid box."""
    lo, length = _box(grid)
    k_gen, k_pos = jax.random.split(key)
    gen = int(jax.random.randint(k_gen, (), 1, min(3, grid.levels) + 1))
    side = length / 2**gen
    corner = lo + side * jax.random.randint(k_pos, (grid.d,), 0, 2**gen)

    def fn(x):
        inside = jnp.all((x >= corner) & (x < corner + side), axis=-1)
        return jnp.where(inside, 1.0, 0.0)

    return from_callable(grid, fn)


def constant(grid: Grid, key: chex.PRNGKey) -> GridFunction:
    c = 1.0 + jnp.abs(jax.random.normal(key))
    return GridFunction(grid=grid, values=jnp.full(grid.shape, c))


GENERATORS = {
    "spike": spike,
    "bump": bump,
    "step": step,
    "cube": cube,
    "constant": constant,
}


def make_battery(spec: Optional[dict]) -> List[Instance]:
    """Instances described by {kinds: [...], count: int, seed: int}."""
    spec = spec or {}
    kinds = tuple(spec.get("kinds", ("spike", "bump", "step", "cube")))
    count = int(spec.get("count", 8))
    seed = int(spec.get("seed", 0))
    if count < 1:
        raise ConfigError("The input battery is empty; set `count` >= 1.")
    unknown = [k for k in kinds if k not in GENERATORS]
    if unknown or not kinds:
        raise ConfigError(f"Battery kinds must be drawn from {BATTERY_KINDS}, got {kinds}.")
    return [
        Instance(f"{i:04d}-{kinds[i % len(kinds)]}", seed, kinds[i % len(kinds)], i)
        for i in range(count)
    ]


def realize(instance: Instance, grid: Grid, component: int = 0) -> GridFunction:
    key = component_key(instance.seed, instance.index, component)
    return GENERATORS[instance.kind](grid, key)


def realize_sequence(
    instance: Instance, grid: Grid, num_components: int
) -> SequenceGridFunction:
    """N components drawn with the instance kind; component 0 is the scalar instance."""
    return stack_functions(
        [realize(instance, grid, j) for j in range(num_components)]
    )


def kind_counts(battery: Sequence[Instance]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for instance in battery:
        counts[instance.kind] = counts.get(instance.kind, 0) + 1
    return counts
