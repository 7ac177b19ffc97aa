"""Calderon-Zygmund decomposition on the dyadic tree of the grid box, and
the almost-orthogonality inequality check.

Averages are computed from hierarchical block sums: a parent sum is the sum
of its children's sums. Floating-point addition of nonnegative numbers is
monotone, so child <= parent holds exactly and the stopping-time bounds are
exact rather than approximate.
"""
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import chex
import jax
import numpy as np
from flax import struct

from varops.errors import DimensionError, LevelTooLowError, ParameterError
from varops.grid import GridFunction, SequenceGridFunction, lrho_norm

RECONSTRUCTION_TOL = 1e-12
AOL_HYPOTHESIS_SLACK = 1e-12
AOL_CONCLUSION_SLACK = 1e-10


@struct.dataclass
class DyadicCube:
    g: int = struct.field(pytree_node=False)
    corner: Tuple[int, ...] = struct.field(pytree_node=False)

    @property
    def side(self) -> int:
        """Side length in cells."""
        return 2**self.g

    def slices(self) -> Tuple[slice, ...]:
        return tuple(slice(c, c + self.side) for c in self.corner)

    def dilate_slices(self, factor: float, n: int) -> Tuple[slice, ...]:
        """Cells meeting the concentric dilate, rounded outward and clipped."""
        half = factor * self.side / 2
        out = []
        for c in self.corner:
            centre = c + self.side / 2
            lo = max(0, math.floor(centre - half))
            hi = min(n, math.ceil(centre + half))
            out.append(slice(lo, hi))
        return tuple(out)

    def parent(self) -> "DyadicCube":
        side = 2 * self.side
        return DyadicCube(g=self.g + 1, corner=tuple(c - c % side for c in self.corner))


@struct.dataclass
class CZDecomposition:
    lam: float = struct.field(pytree_node=False)
    cubes: Tuple[DyadicCube, ...] = struct.field(pytree_node=False)
    good: GridFunction
    bad_values: Tuple[np.ndarray, ...]  # b_i restricted to Q_i
    omega: np.ndarray  # bool mask of the union of the cubes
    omega_tilde: np.ndarray  # bool mask of the union of the dilates

    @property
    def grid(self):
        return self.good.grid

    def bad_part(self, i: int) -> GridFunction:
        values = np.zeros(self.grid.shape)
        values[self.cubes[i].slices()] = self.bad_values[i]
        return GridFunction(grid=self.grid, values=values)

    def bad(self) -> np.ndarray:
        """Sum of all bad parts."""
        values = np.zeros(self.grid.shape)
        for cube, b in zip(self.cubes, self.bad_values):
            values[cube.slices()] += b
        return values


@struct.dataclass
class VectorCZDecomposition:
    lam: float = struct.field(pytree_node=False)
    rho: float = struct.field(pytree_node=False)
    cubes: Tuple[DyadicCube, ...] = struct.field(pytree_node=False)
    good: SequenceGridFunction
    bad_values: Tuple[np.ndarray, ...]  # (N, side, ...) per cube
    omega: np.ndarray


class PropertyCheck(NamedTuple):
    passed: bool
    margin: float
    asserted: bool = True


@struct.dataclass
class CZDReport:
    checks: Dict[str, PropertyCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values() if c.asserted)

    def failures(self) -> List[str]:
        return [k for k, c in self.checks.items() if c.asserted and not c.passed]


def _block_sums(values: np.ndarray, d: int) -> List[np.ndarray]:
    """Sums over dyadic blocks for every generation, over the trailing d axes."""
    sums = [values]
    lead = values.shape[:-d]
    while sums[-1].shape[-1] > 1:
        x = sums[-1]
        b = x.shape[-1] // 2
        if d == 1:
            sums.append(x.reshape(lead + (b, 2)).sum(axis=-1))
        else:
            sums.append(x.reshape(lead + (b, 2, b, 2)).sum(axis=(-1, -3)))
    return sums


def _upsample(x: np.ndarray, d: int) -> np.ndarray:
    for axis in range(x.ndim - d, x.ndim):
        x = np.repeat(x, 2, axis=axis)
    return x


def _stopping_time(phi: np.ndarray, lam: float, d: int):
    """Maximal dyadic cubes whose average of phi >= 0 exceeds lam."""
    sums = _block_sums(phi, d)
    top = len(sums) - 1
    root_avg = float(sums[top].reshape(-1)[0]) / 2 ** (d * top)
    if root_avg > lam:
        raise LevelTooLowError(lam, root_avg)
    cubes = []
    active = np.ones(sums[top - 1].shape, dtype=bool) if top > 0 else None
    for g in range(top - 1, -1, -1):
        avg = sums[g] / 2 ** (d * g)
        selected = active & (avg > lam)
        for corner in zip(*np.nonzero(selected)):
            cubes.append(DyadicCube(g=g, corner=tuple(int(c) * 2**g for c in corner)))
        if g > 0:
            active = _upsample(active & ~selected, d)
    return tuple(cubes), sums


def _check_level(lam: float) -> None:
    if not lam > 0:
        raise ParameterError(f"Decomposition level must be positive, got {lam}.")


def _omega_masks(cubes, shape, d) -> Tuple[np.ndarray, np.ndarray]:
    omega = np.zeros(shape, dtype=bool)
    omega_tilde = np.zeros(shape, dtype=bool)
    factor = 5 * math.sqrt(d)
    for cube in cubes:
        omega[cube.slices()] = True
        omega_tilde[cube.dilate_slices(factor, shape[0])] = True
    return omega, omega_tilde


def _cube_mean(sums: List[np.ndarray], cube: DyadicCube, d: int) -> np.ndarray:
    """Average over the cube from hierarchical sums (trailing d axes)."""
    block = tuple(c // cube.side for c in cube.corner)
    index = (Ellipsis,) + block
    return sums[cube.g][index] / 2 ** (d * cube.g)


def cz_decompose(f: GridFunction, lam: float) -> CZDecomposition:
    """Split f = g + sum_i b_i at level lam via the dyadic stopping time."""
    _check_level(lam)
    d = f.grid.d
    values = np.asarray(f.values, dtype=np.float64)
    cubes, _ = _stopping_time(np.abs(values), lam, d)
    signed = _block_sums(values, d)
    good = values.copy()
    bad = []
    for cube in cubes:
        avg = _cube_mean(signed, cube, d)
        region = cube.slices()
        bad.append(values[region] - avg)
        good[region] = avg
    omega, omega_tilde = _omega_masks(cubes, values.shape, d)
    return CZDecomposition(
        lam=float(lam),
        cubes=cubes,
        good=GridFunction(grid=f.grid, values=good),
        bad_values=tuple(bad),
        omega=omega,
        omega_tilde=omega_tilde,
    )


def dyadic_maximal_exact(values: np.ndarray, d: int) -> np.ndarray:
    """Dyadic maximal function of |values| from the same block sums."""
    sums = _block_sums(np.abs(values), d)
    out = sums[0].copy()
    for g in range(len(sums) - 1, 0, -1):
        avg = sums[g] / 2 ** (d * g)
        for _ in range(g):
            avg = _upsample(avg, d)
        out = np.maximum(out, avg)
    return out


def _check(passed: bool, margin: float, asserted: bool = True) -> PropertyCheck:
    return PropertyCheck(passed=bool(passed), margin=float(margin), asserted=asserted)


def _structure_checks(cubes, sums, lam, d, n) -> Dict[str, PropertyCheck]:
    """Cube averages, disjointness and maximality."""
    top = len(sums) - 1
    checks = {}
    worst_low, worst_high = math.inf, math.inf
    worst_parent = math.inf
    cover = np.zeros((n,) * d, dtype=np.int64)
    for cube in cubes:
        avg = float(_cube_mean(sums, cube, d))
        worst_low = min(worst_low, avg - lam)
        worst_high = min(worst_high, 2**d * lam - avg)
        parent = cube.parent()
        parent_avg = float(_cube_mean(sums, parent, d)) if parent.g <= top else 0.0
        worst_parent = min(worst_parent, lam - parent_avg)
        cover[cube.slices()] += 1
    worst_low = worst_low if cubes else 0.0
    worst_high = worst_high if cubes else 0.0
    worst_parent = worst_parent if cubes else 0.0
    # vacuous without cubes
    checks["cube_averages"] = _check(
        not cubes or (worst_low > 0 and worst_high >= 0), min(worst_low, worst_high)
    )
    overlap = int(cover.max()) if cover.size else 0
    checks["disjoint"] = _check(overlap <= 1, 1 - overlap)
    checks["maximal"] = _check(worst_parent >= 0, worst_parent)
    return checks


def verify_czd(dec: CZDecomposition, f: GridFunction) -> CZDReport:
    """Re-check every decomposition property and report the worst margins."""
    d = f.grid.d
    n = f.grid.n
    lam = dec.lam
    values = np.asarray(f.values, dtype=np.float64)
    a = np.abs(values)
    sums = _block_sums(a, d)
    checks = _structure_checks(dec.cubes, sums, lam, d, n)

    outside = np.where(dec.omega, 0.0, a)
    margin = lam - float(outside.max())
    checks["outside_bound"] = _check(margin >= 0, margin)

    mhat = dyadic_maximal_exact(values, d)
    inside = mhat[dec.omega]
    margin = float(inside.min()) - lam if inside.size else 0.0
    checks["omega_in_level_set"] = _check(not inside.size or margin > 0, margin)
    # Stated for the full maximal function; only the dyadic one is computed.
    escaped = (mhat > 4**d * lam) & ~dec.omega_tilde
    checks["level_set_in_dilates"] = _check(
        not escaped.any(), -float(escaped.sum()), asserted=False
    )

    recon = np.asarray(dec.good.values) + dec.bad()
    err = float(np.max(np.abs(recon - values)))
    tol = RECONSTRUCTION_TOL * (1.0 + float(a.max()))
    checks["reconstruction"] = _check(err <= tol, tol - err)

    margin = 2**d * lam - float(np.max(np.abs(np.asarray(dec.good.values))))
    checks["good_bound"] = _check(margin >= 0, margin)

    worst_mean = 0.0
    worst_avg = math.inf
    for b in dec.bad_values:
        worst_mean = max(worst_mean, abs(float(b.mean())))
        worst_avg = min(worst_avg, 2 ** (d + 1) * lam - float(np.abs(b).mean()))
    worst_avg = worst_avg if dec.cubes else 0.0
    checks["bad_mean_zero"] = _check(worst_mean <= tol, tol - worst_mean)
    checks["bad_average"] = _check(worst_avg >= -RECONSTRUCTION_TOL * lam, worst_avg)
    return CZDReport(checks=checks)


def cz_decompose_vector(
    seq: SequenceGridFunction, lam: float, rho: float
) -> VectorCZDecomposition:
    """Decomposition of an l^rho-valued function: cubes are selected on the
    pointwise norm, good and bad parts are built per component."""
    _check_level(lam)
    if not rho > 1:
        raise ParameterError(f"Vector decomposition needs rho > 1, got {rho}.")
    d = seq.grid.d
    comps = np.asarray(seq.components, dtype=np.float64)
    phi = np.asarray(lrho_norm(seq.components, rho))
    cubes, _ = _stopping_time(phi, lam, d)
    signed = _block_sums(comps, d)
    good = comps.copy()
    bad = []
    for cube in cubes:
        avg = _cube_mean(signed, cube, d)
        region = (slice(None),) + cube.slices()
        avg = avg.reshape(avg.shape + (1,) * d)
        bad.append(comps[region] - avg)
        good[region] = avg
    omega, _ = _omega_masks(cubes, phi.shape, d)
    return VectorCZDecomposition(
        lam=float(lam),
        rho=float(rho),
        cubes=cubes,
        good=SequenceGridFunction(grid=seq.grid, components=good),
        bad_values=tuple(bad),
        omega=omega,
    )


def verify_vector_czd(dec: VectorCZDecomposition, seq: SequenceGridFunction) -> CZDReport:
    d = seq.grid.d
    lam = dec.lam
    comps = np.asarray(seq.components, dtype=np.float64)
    phi = np.asarray(lrho_norm(seq.components, dec.rho))
    checks = _structure_checks(dec.cubes, _block_sums(phi, d), lam, d, seq.grid.n)

    margin = lam - float(np.where(dec.omega, 0.0, phi).max())
    checks["outside_bound"] = _check(margin >= 0, margin)

    recon = np.asarray(dec.good.components).copy()
    for cube, b in zip(dec.cubes, dec.bad_values):
        recon[(slice(None),) + cube.slices()] += b
    err = float(np.max(np.abs(recon - comps)))
    tol = RECONSTRUCTION_TOL * (1.0 + float(np.abs(comps).max()))
    checks["reconstruction"] = _check(err <= tol, tol - err)

    gnorm = float(np.max(np.asarray(lrho_norm(dec.good.components, dec.rho))))
    margin = 2**d * lam - gnorm
    checks["good_bound"] = _check(margin >= -RECONSTRUCTION_TOL * lam, margin)

    worst_mean = 0.0
    axes = tuple(range(1, d + 1))
    for b in dec.bad_values:
        worst_mean = max(worst_mean, float(np.abs(b.mean(axis=axes)).max()))
    checks["bad_mean_zero"] = _check(worst_mean <= tol, tol - worst_mean)
    return CZDReport(checks=checks)


@struct.dataclass
class AOLReport:
    hypothesis_holds: bool
    hypothesis_margin: float  # min over entries of bound - ||h_kj||
    lhs: float
    rhs: float
    conclusion_holds: Optional[bool]  # None when the hypothesis fails

    @property
    def passed(self) -> bool:
        return bool(self.hypothesis_holds and self.conclusion_holds)


def _as_nonneg(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ParameterError(f"`{name}` must be finite and nonnegative.")
    return x


def aol_check(
    h_norms: Sequence[Sequence[float]],
    delta: Sequence[float],
    omega: Sequence[float],
    r: float,
    group_norms: Sequence[float],
) -> AOLReport:
    """Almost-orthogonality inequality for finitely many pieces h_kj.

    `omega[k - j + J - 1]` is the decay at offset k - j. If every
    ||h_kj|| <= omega(k - j) * delta_j^(1/r), then
    sum_k ||sum_j h_kj||^r <= (sum omega)^r * sum_j delta_j.
    """
    if not r > 1:
        raise ParameterError(f"The exponent must satisfy r > 1, got {r}.")
    h = _as_nonneg(h_norms, "h_norms")
    delta = _as_nonneg(delta, "delta")
    omega = _as_nonneg(omega, "omega")
    group = _as_nonneg(group_norms, "group_norms")
    if h.ndim != 2:
        raise DimensionError("`h_norms` must be a (K, J) matrix.")
    K, J = h.shape
    if delta.shape != (J,) or omega.shape != (K + J - 1,) or group.shape != (K,):
        raise DimensionError(
            f"Expected delta ({J},), omega ({K + J - 1},), group_norms ({K},)."
        )
    offset = np.arange(K)[:, None] - np.arange(J)[None, :] + J - 1
    bound = omega[offset] * delta[None, :] ** (1.0 / r)
    slack = AOL_HYPOTHESIS_SLACK * (1.0 + bound)
    hypothesis = bool(np.all(h <= bound + slack))
    lhs = float(np.sum(group**r))
    rhs = float(np.sum(omega) ** r * np.sum(delta))
    conclusion = None
    if hypothesis:
        conclusion = lhs <= rhs * (1.0 + AOL_CONCLUSION_SLACK) + AOL_CONCLUSION_SLACK
    return AOLReport(
        hypothesis_holds=hypothesis,
        hypothesis_margin=float(np.min(bound - h)) if h.size else 0.0,
        lhs=lhs,
        rhs=rhs,
        conclusion_holds=conclusion,
    )


@struct.dataclass
class AOLInstance:
    vectors: np.ndarray  # (K, J, dim)
    h_norms: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    r: float = struct.field(pytree_node=False)
    group_norms: np.ndarray


def random_aol_instance(
    key: chex.PRNGKey, num_k: int, num_j: int, dim: int = 4, r: float = 2.0
) -> AOLInstance:
    """Vectors h_kj with ||h_kj|| = omega(k - j) * delta_j^(1/r) exactly
    up to rounding, pointing in random directions."""
    k_omega, k_delta, k_dir = jax.random.split(key, 3)
    omega = np.asarray(
        jax.random.uniform(k_omega, (num_k + num_j - 1,), minval=0.0, maxval=1.0)
    )
    delta = np.asarray(jax.random.uniform(k_delta, (num_j,), minval=0.0, maxval=2.0))
    directions = np.asarray(jax.random.normal(k_dir, (num_k, num_j, dim)))
    directions = directions / np.linalg.norm(directions, axis=-1, keepdims=True)
    offset = np.arange(num_k)[:, None] - np.arange(num_j)[None, :] + num_j - 1
    scale = omega[offset] * delta[None, :] ** (1.0 / r)
    vectors = directions * scale[..., None]
    return AOLInstance(
        vectors=vectors,
        h_norms=np.linalg.norm(vectors, axis=-1),
        delta=delta,
        omega=omega,
        r=float(r),
        group_norms=np.linalg.norm(vectors.sum(axis=1), axis=-1),
    )


def czd_to_json(dec: CZDecomposition, report: Optional[CZDReport] = None) -> dict:
    out = {
        "lambda": dec.lam,
        "cubes": [{"g": c.g, "corner": list(c.corner)} for c in dec.cubes],
    }
    if report is not None:
        out["report"] = {
            name: {"passed": c.passed, "margin": c.margin, "asserted": c.asserted}
            for name, c in report.checks.items()
        }
    return out
