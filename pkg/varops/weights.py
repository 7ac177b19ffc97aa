"""Muckenhoupt weights on grids and their A_p / A_1 constants."""
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import chex
import jax.numpy as jnp
from absl import logging
from flax import struct

from varops.errors import ConfigError, ParameterError, WeightConstructionError
from varops.grid import Grid, GridFunction, grid_function, refine
from varops.maximal import (
    CubeFamily,
    cube_statistics,
    dyadic_cubes,
    hl_maximal,
    window_means,
)

STABILITY_FACTOR = 2.0
STABILITY_DOUBLINGS = 3


@struct.dataclass
class Weight:
    base: GridFunction
    cache: dict = struct.field(
        pytree_node=False, default_factory=dict, compare=False, hash=False
    )

    @property
    def grid(self) -> Grid:
        return self.base.grid

    @property
    def values(self) -> chex.Array:
        return self.base.values


def make_weight(base: GridFunction) -> Weight:
    if not bool(jnp.all(jnp.isfinite(base.values))):
        raise WeightConstructionError("Weight values must be finite.")
    if not bool(jnp.all(base.values > 0)):
        raise WeightConstructionError("Weight values must be strictly positive.")
    return Weight(base=base)


def unit_weight(grid: Grid) -> Weight:
    return make_weight(GridFunction(grid=grid, values=jnp.ones(grid.shape)))


def explicit_weight(grid: Grid, values: Sequence[float]) -> Weight:
    return make_weight(grid_function(grid, values))


def _radii(grid: Grid) -> chex.Array:
    return jnp.linalg.norm(grid.coordinates(), axis=-1).reshape(grid.shape)


def power_weight(grid: Grid, alpha: float) -> Weight:
    """w(x) = |x|^alpha sampled on the grid."""
    r = _radii(grid)
    if bool(jnp.any(r == 0)):
        raise WeightConstructionError(
            "A grid sample sits at the origin; shift the grid origin by h/2."
        )
    return make_weight(GridFunction(grid=grid, values=r ** float(alpha)))


def truncated_power_weight(grid: Grid) -> Weight:
    """min(1, |x|^(-d/2))."""
    r = _radii(grid)
    if bool(jnp.any(r == 0)):
        raise WeightConstructionError(
            "A grid sample sits at the origin; shift the grid origin by h/2."
        )
    return make_weight(
        GridFunction(grid=grid, values=jnp.minimum(1.0, r ** (-grid.d / 2)))
    )


def reciprocal(w: Weight) -> Weight:
    return make_weight(w.base.replace(values=1.0 / w.values))


def dual_weight(w: Weight, p: float) -> Weight:
    """w^(-1/(p-1)), the weight paired with w in the A_p condition."""
    _check_p(p)
    return make_weight(w.base.replace(values=w.values ** (-1.0 / (p - 1))))


def weight_from_spec(grid: Grid, spec: Optional[dict]) -> Weight:
    """Build a weight from {kind: power | explicit | unit | truncated}."""
    spec = spec or {"kind": "unit"}
    kind = spec.get("kind", "unit")
    if kind == "unit":
        return unit_weight(grid)
    if kind == "power":
        if "alpha" not in spec:
            raise ConfigError("A power weight needs `alpha`.")
        return power_weight(grid, spec["alpha"])
    if kind == "explicit":
        return explicit_weight(grid, spec["values"])
    if kind == "truncated":
        return truncated_power_weight(grid)
    raise ConfigError(f"Unknown weight kind {kind}.")


def a1_battery(grid: Grid) -> Dict[str, Weight]:
    """Standard A_1 members: 1, |x|^alpha with -d < alpha <= 0 and the truncation."""
    battery = {"unit": unit_weight(grid), "truncated": truncated_power_weight(grid)}
    for frac in (0.25, 0.5, 0.75):
        alpha = -frac * grid.d
        battery[f"power{alpha:g}"] = power_weight(grid, alpha)
    return battery


def _check_p(p: float) -> None:
    if not p > 1:
        raise ParameterError(f"A_p needs p > 1, got p={p}.")


def _mean(x: chex.Array) -> chex.Array:
    return jnp.mean(x, axis=-1)


def ap_constant(w: Weight, p: float, fam: CubeFamily) -> float:
    """sup over admissible cubes of avg(w) * avg(w^(-1/(p-1)))^(p-1)."""
    _check_p(p)
    key = ("ap", float(p), fam)
    if key in w.cache:
        return w.cache[key]
    u = w.values ** (-1.0 / (p - 1))
    sup = 1.0
    pairs = zip(
        cube_statistics(w.values, fam, _mean, window_means),
        cube_statistics(u, fam, _mean, window_means),
    )
    for (_, avg_w), (_, avg_u) in pairs:
        sup = max(sup, float(jnp.max(avg_w * avg_u ** (p - 1))))
    w.cache[key] = sup
    return sup


def a1_constant(w: Weight, fam: CubeFamily) -> float:
    """max over samples of M(w)/w."""
    key = ("a1", fam)
    if key in w.cache:
        return w.cache[key]
    m = hl_maximal(w.base, fam)
    value = max(1.0, float(jnp.max(m.values / w.values)))
    w.cache[key] = value
    return value


def standard_lemma_ratio(
    w: Weight,
    x0: Sequence[float],
    r: float,
    alpha: float,
    fam: Optional[CubeFamily] = None,
) -> float:
    """Tail integral of w/|x - x0|^(d + alpha) over |x - x0| > r, divided by
    r^(-alpha) times the smallest M(w) on the ball |x - x0| < r."""
    if not r > 0:
        raise ParameterError(f"Radius must be positive, got {r}.")
    if not alpha > 0:
        raise ParameterError(f"Decay exponent must be positive, got {alpha}.")
    grid = w.grid
    fam = dyadic_cubes(grid) if fam is None else fam
    dist = jnp.linalg.norm(
        grid.coordinates() - jnp.asarray(x0, dtype=jnp.float64), axis=-1
    )
    inside = dist < r
    if not bool(jnp.any(inside)):
        raise ParameterError(f"No grid sample lies within {r} of {tuple(x0)}.")
    far = dist > r
    safe = jnp.where(far, dist, 1.0)
    wv = w.values.reshape(-1)
    tail = jnp.sum(jnp.where(far, wv / safe ** (grid.d + alpha), 0.0)) * grid.cell_volume
    mw = hl_maximal(w.base, fam).flat
    floor = jnp.min(jnp.where(inside, mw, jnp.inf))
    return float(tail / (r ** (-alpha) * floor))


def refinement_growth(
    constant_fn: Callable[[Grid], float],
    grid: Grid,
    doublings: int = STABILITY_DOUBLINGS,
) -> Tuple[List[float], float]:
    """Constants on grid, refine(grid), ... and the overall growth factor."""
    constants = [constant_fn(grid)]
    for _ in range(doublings):
        grid = refine(grid)
        constants.append(constant_fn(grid))
    growth = max(constants[1:]) / constants[0]
    logging.debug("Refinement constants %s, growth %.4g.", constants, growth)
    return constants, growth


def is_stable(
    constant_fn: Callable[[Grid], float],
    grid: Grid,
    doublings: int = STABILITY_DOUBLINGS,
    factor: float = STABILITY_FACTOR,
) -> bool:
    _, growth = refinement_growth(constant_fn, grid, doublings)
    return growth <= factor


def weight_stability(
    spec: dict,
    grid: Grid,
    kind: str,
    p: float = 2.0,
    doublings: int = STABILITY_DOUBLINGS,
    factor: float = STABILITY_FACTOR,
) -> Tuple[List[float], float, bool]:
    """Refinement check of the constant a weight spec must keep bounded.

    `kind` is "ap", "a1", or "a1_reciprocal" (the BMO endpoint condition).
    """

    def constant_fn(g: Grid) -> float:
        w = weight_from_spec(g, spec)
        fam = dyadic_cubes(g)
        if kind == "ap":
            return ap_constant(w, p, fam)
        if kind == "a1":
            return a1_constant(w, fam)
        if kind == "a1_reciprocal":
            return a1_constant(reciprocal(w), fam)
        raise ParameterError(f"Unknown weight condition {kind}.")

    constants, growth = refinement_growth(constant_fn, grid, doublings)
    return constants, growth, growth <= factor
