"""Truncated singular integrals, ball/cube averages and approximate identities.

All operators are direct midpoint quadratures on the grid. Distances are
measured in whole index offsets times h, so shell and ball memberships are
decided on exact lattice geometry.
"""
import math
from functools import partial
from typing import Callable, Dict, List, Sequence, Tuple

import chex
import jax
import jax.numpy as jnp
import numpy as np
from flax import struct

from varops.errors import DimensionError, ParameterError
from varops.grid import Grid, GridFunction
from varops.variation import TruncationLadder, VariationFamily, make_ladder

ROW_BLOCK = 256
DEFAULT_ANGLES = 64


@struct.dataclass
class HomogeneousKernel:
    """K(x, y) = Omega((x - y) / |x - y|) / |x - y|^d.

    d = 1: omega holds (Omega(-1), Omega(+1)).
    d = 2: omega holds samples at angles 2 pi k / M, interpolated linearly.
    """

    d: int = struct.field(pytree_node=False)
    omega: chex.Array
    alpha: float = struct.field(pytree_node=False)
    C: float = struct.field(pytree_node=False)

    def angular(self, diff: chex.Array) -> chex.Array:
        """Omega in the direction of `diff` (..., d)."""
        return _omega_at(self.omega, diff)

    def evaluate(self, diff: chex.Array) -> chex.Array:
        """K at displacement x - y = diff, zero on the diagonal."""
        diff = jnp.asarray(diff, dtype=jnp.float64)
        dist = jnp.sqrt(jnp.sum(diff**2, axis=-1))
        safe = jnp.where(dist > 0, dist, 1.0)
        return jnp.where(dist > 0, self.angular(diff) / safe**self.d, 0.0)


def _omega_at(omega: chex.Array, diff: chex.Array) -> chex.Array:
    if diff.shape[-1] == 1:
        return jnp.where(diff[..., 0] > 0, omega[1], omega[0])
    num = omega.shape[0]
    theta = jnp.arctan2(diff[..., 1], diff[..., 0]) % (2 * jnp.pi)
    pos = theta * (num / (2 * jnp.pi))
    k0 = jnp.floor(pos).astype(jnp.int32)
    frac = pos - k0
    k0 = k0 % num
    return (1.0 - frac) * omega[k0] + frac * omega[(k0 + 1) % num]


def homogeneous_kernel(
    d: int, omega: Sequence[float], alpha: float, C: float
) -> HomogeneousKernel:
    """Validated kernel; the sphere mean of omega is subtracted."""
    omega = np.asarray(omega, dtype=np.float64)
    if d not in (1, 2):
        raise ParameterError(f"Only d in (1, 2) is supported, got d={d}.")
    if d == 1 and omega.shape != (2,):
        raise DimensionError("A 1d kernel takes exactly (Omega(-1), Omega(+1)).")
    if d == 2 and (omega.ndim != 1 or omega.size < 3):
        raise DimensionError("A 2d kernel needs at least 3 angle samples.")
    if not (alpha > 0 and C > 0):
        raise ParameterError("Hoelder exponent and size constant must be positive.")
    omega = omega - omega.mean()
    if np.max(np.abs(omega)) > C * (1 + 1e-12):
        raise ParameterError(f"sup |Omega| = {np.max(np.abs(omega))} exceeds C = {C}.")
    if d == 2:
        step = 2 * np.pi / omega.size
        jumps = np.abs(np.roll(omega, -1) - omega)
        if np.max(jumps) > C * step**alpha * (1 + 1e-12):
            raise ParameterError(
                f"Angle samples are not Hoelder of order {alpha} with constant {C}."
            )
    return HomogeneousKernel(d=d, omega=jnp.asarray(omega), alpha=float(alpha), C=float(C))


def hilbert() -> HomogeneousKernel:
    return homogeneous_kernel(1, [-1.0, 1.0], alpha=1.0, C=1.0)


def riesz(j: int, num_angles: int = DEFAULT_ANGLES) -> HomogeneousKernel:
    """Omega_j(theta) = theta_j on the circle, j in {1, 2}."""
    if j not in (1, 2):
        raise ParameterError(f"Riesz index must be 1 or 2, got {j}.")
    theta = 2 * np.pi * np.arange(num_angles) / num_angles
    samples = np.cos(theta) if j == 1 else np.sin(theta)
    return homogeneous_kernel(2, samples, alpha=1.0, C=1.0)


KERNEL_PRESETS: Dict[str, Callable[[], HomogeneousKernel]] = {
    "hilbert": hilbert,
    "riesz1": lambda: riesz(1),
    "riesz2": lambda: riesz(2),
}


def kernel_from_spec(spec: dict) -> HomogeneousKernel:
    if "preset" in spec:
        if spec["preset"] not in KERNEL_PRESETS:
            raise ParameterError(f"Unknown kernel preset {spec['preset']}.")
        return KERNEL_PRESETS[spec["preset"]]()
    return homogeneous_kernel(spec["d"], spec["omega"], spec["alpha"], spec["C"])


def _rowwise(row_fn, *per_row):
    """Apply `row_fn` to every grid point, streaming blocks of rows."""
    num = per_row[0].shape[0]
    size = min(num, ROW_BLOCK)
    blocks = tuple(a.reshape((num // size, size) + a.shape[1:]) for a in per_row)
    out = jax.lax.map(lambda xs: jax.vmap(row_fn)(*xs), blocks)
    return out.reshape((num,) + out.shape[2:])


def _offsets(ix: chex.Array, idx: chex.Array) -> chex.Array:
    return (ix[None, :] - idx).astype(jnp.float64)


@jax.jit
def _truncated_samples(idx, h, fvals, omega, ladder):
    d = idx.shape[1]

    def row(ix):
        off = _offsets(ix, idx)
        dist = h * jnp.sqrt(jnp.sum(off**2, axis=-1))
        safe = jnp.where(dist > 0, dist, 1.0)
        contrib = jnp.where(dist > 0, _omega_at(omega, off) / safe**d * fvals, 0.0)
        keep = dist[None, :] > ladder[:, None]
        return jnp.sum(jnp.where(keep, contrib[None, :], 0.0), axis=-1)

    return _rowwise(row, idx) * h**d


@partial(jax.jit, static_argnames=("metric",))
def _average_samples(idx, h, fvals, ladder, metric):
    def row(ix, fx):
        off = jnp.abs(_offsets(ix, idx))
        if metric == "ball":
            dist = h * jnp.sqrt(jnp.sum(off**2, axis=-1))
        else:
            # side t cube: |y_i - x_i| < t / 2 on every axis
            dist = 2.0 * h * jnp.max(off, axis=-1)
        inside = dist[None, :] < ladder[:, None]
        excess = jnp.sum(jnp.where(inside, fvals[None, :] - fx, 0.0), axis=-1)
        return fx + excess / jnp.sum(inside, axis=-1)

    return _rowwise(row, idx, fvals)


def _check_kernel(f: GridFunction, K: HomogeneousKernel) -> None:
    if K.d != f.grid.d:
        raise DimensionError(f"Kernel is {K.d}-dimensional, grid is {f.grid.d}-dimensional.")


def singular_family(
    f: GridFunction, K: HomogeneousKernel, ladder: TruncationLadder
) -> VariationFamily:
    """{K_t f(x)} for every rung t of the ladder."""
    _check_kernel(f, K)
    samples = _truncated_samples(
        jnp.asarray(f.grid.indices()), f.grid.h, f.flat, K.omega, ladder.array
    )
    return VariationFamily(grid=f.grid, ladder=ladder, samples=samples)


def truncated_singular(f: GridFunction, K: HomogeneousKernel, t: float) -> GridFunction:
    """K_t f(x) = sum over |x - y| > t of K(x, y) f(y) h^d."""
    if not t > 0:
        raise ParameterError(f"Truncation radius must be positive, got {t}.")
    fam = singular_family(f, K, make_ladder([t]))
    return GridFunction(grid=f.grid, values=fam.samples[:, 0].reshape(f.grid.shape))


def annulus_apply(
    f: GridFunction, K: HomogeneousKernel, s: float, t: float
) -> GridFunction:
    """K_(s,t] f = K_s f - K_t f, the integral over s < |x - y| <= t."""
    if not 0 < s < t:
        raise ParameterError(f"Annulus needs 0 < s < t, got s={s}, t={t}.")
    return truncated_singular(f, K, s) - truncated_singular(f, K, t)


def average_family(f: GridFunction, ladder: TruncationLadder) -> VariationFamily:
    """{A_t f(x)}: plain averages over grid points with |y - x| < t."""
    samples = _average_samples(
        jnp.asarray(f.grid.indices()), f.grid.h, f.flat, ladder.array, metric="ball"
    )
    return VariationFamily(grid=f.grid, ladder=ladder, samples=samples)


def cube_average_family(f: GridFunction, ladder: TruncationLadder) -> VariationFamily:
    """Averages over axis-parallel cubes of side t centred at x."""
    samples = _average_samples(
        jnp.asarray(f.grid.indices()), f.grid.h, f.flat, ladder.array, metric="cube"
    )
    return VariationFamily(grid=f.grid, ladder=ladder, samples=samples)


def ball_average(f: GridFunction, t: float) -> GridFunction:
    if not t > 0:
        raise ParameterError(f"Ball radius must be positive, got {t}.")
    fam = average_family(f, make_ladder([t]))
    return GridFunction(grid=f.grid, values=fam.samples[:, 0].reshape(f.grid.shape))


def ball_volume(d: int, r: float) -> float:
    """Continuum volume of the radius-r ball in R^d."""
    return 2.0 * r if d == 1 else math.pi * r**2


@struct.dataclass
class BallCombination:
    """phi = sum_k alpha_k 1_{B_{r_k}}."""

    balls: Tuple[Tuple[float, float], ...] = struct.field(pytree_node=False)

    def coefficients(self, d: int) -> List[float]:
        """alpha_k |B_{r_k}|."""
        return [alpha * ball_volume(d, r) for alpha, r in self.balls]

    def l1_norm(self, d: int) -> float:
        return sum(self.coefficients(d))

    @property
    def radii(self) -> List[float]:
        return [r for _, r in self.balls]


def ball_combination(pairs: Sequence[Tuple[float, float]]) -> BallCombination:
    pairs = tuple((float(a), float(r)) for a, r in pairs)
    if len(pairs) == 0:
        raise ParameterError("A ball combination needs at least one ball.")
    if not all(a > 0 and r > 0 for a, r in pairs):
        raise ParameterError("Ball weights and radii must be positive.")
    return BallCombination(balls=pairs)


def from_radial(profile: Callable[[float], float], radii: Sequence[float]) -> BallCombination:
    """Layer-cake approximation of a radial, radially decreasing profile."""
    radii = sorted(float(r) for r in radii)
    heights = [profile(r) for r in radii] + [0.0]
    pairs = [
        (heights[k] - heights[k + 1], r)
        for k, r in enumerate(radii)
        if heights[k] > heights[k + 1]
    ]
    return ball_combination(pairs)


def heat_combination(radii: Sequence[float] = (0.5, 1.0, 1.5, 2.0)) -> BallCombination:
    return from_radial(lambda r: math.exp(-(r**2)), radii)


def poisson_combination(
    d: int, radii: Sequence[float] = (0.5, 1.0, 2.0, 4.0)
) -> BallCombination:
    return from_radial(lambda r: (1.0 + r**2) ** (-d / 2), radii)


def ball_combination_from_spec(spec: dict, d: int) -> BallCombination:
    if spec.get("preset") == "heat":
        return heat_combination(spec.get("radii", (0.5, 1.0, 1.5, 2.0)))
    if spec.get("preset") == "poisson":
        return poisson_combination(d, spec.get("radii", (0.5, 1.0, 2.0, 4.0)))
    if "balls" not in spec:
        raise ParameterError(f"Cannot build a ball combination from {spec}.")
    return ball_combination([(b["alpha"], b["r"]) for b in spec["balls"]])


def approx_identity_components(
    f: GridFunction, phi: BallCombination, ladder: TruncationLadder
) -> List[Tuple[float, VariationFamily]]:
    """(alpha_k |B_{r_k}|, {A_{r_k t} f}_t) for every ball of phi."""
    return [
        (c, average_family(f, ladder.scaled(r)))
        for c, r in zip(phi.coefficients(f.grid.d), phi.radii)
    ]


def approx_identity_family(
    f: GridFunction, phi: BallCombination, ladder: TruncationLadder
) -> VariationFamily:
    """{phi_t * f(x)} = {sum_k alpha_k |B_{r_k}| A_{r_k t} f(x)}."""
    parts = approx_identity_components(f, phi, ladder)
    samples = sum(c * fam.samples for c, fam in parts)
    return VariationFamily(grid=f.grid, ladder=ladder, samples=samples)


def kernel_size_constant(K: HomogeneousKernel, grid: Grid) -> float:
    """max |K(x, y)| |x - y|^d over all lattice displacements."""
    idx = grid.indices()
    off = (idx - idx[grid.size // 2]) * grid.h
    off = off[np.any(off != 0, axis=-1)]
    off = jnp.asarray(off, dtype=jnp.float64)
    dist = jnp.sqrt(jnp.sum(off**2, axis=-1))
    return float(jnp.max(jnp.abs(K.evaluate(off)) * dist**K.d))


def kernel_regularity(
    K: HomogeneousKernel,
    grid: Grid,
    delta: float,
    key: chex.PRNGKey,
    num_triples: int = 4096,
    variable: str = "x",
) -> float:
    """Largest smoothness quotient on random triples with |x-y| > 2|x-z| > 0.

    variable "x": |K(x,y) - K(z,y)| |x-y|^(d+delta) / |x-z|^delta,
    variable "y": |K(y,x) - K(y,z)| |x-y|^(d+delta) / |x-z|^delta.
    """
    if variable not in ("x", "y"):
        raise ParameterError(f"variable must be 'x' or 'y', got {variable}.")
    coords = grid.coordinates()
    picks = jax.random.randint(key, (3, num_triples), 0, grid.size)
    x, y, z = coords[picks[0]], coords[picks[1]], coords[picks[2]]
    rxy = jnp.sqrt(jnp.sum((x - y) ** 2, axis=-1))
    rxz = jnp.sqrt(jnp.sum((x - z) ** 2, axis=-1))
    ok = (rxz > 0) & (rxy > 2 * rxz)
    if variable == "x":
        jump = K.evaluate(x - y) - K.evaluate(z - y)
    else:
        jump = K.evaluate(y - x) - K.evaluate(y - z)
    safe = jnp.where(ok, rxz, 1.0)
    quotient = jnp.abs(jump) * rxy ** (K.d + delta) / safe**delta
    return float(jnp.max(jnp.where(ok, quotient, 0.0)))


def best_regularity(
    K: HomogeneousKernel,
    grid: Grid,
    deltas: Sequence[float],
    key: chex.PRNGKey,
    num_triples: int = 4096,
) -> Dict[float, Tuple[float, float]]:
    """Measured (K1, K2) constants for every candidate exponent."""
    key_x, key_y = jax.random.split(key)
    return {
        float(delta): (
            kernel_regularity(K, grid, delta, key_x, num_triples, "x"),
            kernel_regularity(K, grid, delta, key_y, num_triples, "y"),
        )
        for delta in deltas
    }
