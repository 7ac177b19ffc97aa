"""End-to-end batteries checking the numerical kernels against their oracles."""
import math
import time
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import jax
import numpy as np
from absl import logging
from flax import struct

from varops.czd import aol_check, cz_decompose, random_aol_instance, verify_czd
from varops.errors import ConfigError
from varops.grid import grid_function, make_grid
from varops.maximal import all_windows, dyadic_cubes, hl_maximal
from varops.utils.test_helpers import comparability, relative_error
from varops.variation import extrema_prune, vq_exact, vq_oracle
from varops.weights import a1_battery, standard_lemma_ratio

FULL_COUNTS = {
    "oracle_equivalence": 1000,
    "pruning": 1000,
    "czd": 200,
    "aol": 500,
    "standard_lemma": 100,
    "comparability": 50,
}
QUICK_COUNTS = {
    "oracle_equivalence": 100,
    "pruning": 100,
    "czd": 40,
    "aol": 100,
    "standard_lemma": 20,
    "comparability": 10,
}
EXACT_TOL = 1e-12
Q_VALUES = (1.0, 1.5, 2.0, 3.0)
AOL_EXPONENTS = (1.5, 2.0, 3.0)
LEMMA_DECAYS = (0.5, 1.0)

VqFn = Callable[[Sequence[float], float], float]


class SuiteResult(NamedTuple):
    name: str
    count: int
    failures: int
    detail: dict

    @property
    def passed(self) -> bool:
        return self.failures == 0


@struct.dataclass
class SelftestReport:
    suites: Dict[str, SuiteResult]
    runtime: float

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites.values())

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "experiment": "selftest",
            "suites": {
                name: {
                    "count": s.count,
                    "failures": s.failures,
                    "passed": s.passed,
                    **s.detail,
                }
                for name, s in self.suites.items()
            },
            "passed": self.passed,
        }
        if timing:
            out["runtime"] = self.runtime
        return out


def _random_sequences(key, count: int, max_len: int = 10) -> List[np.ndarray]:
    keys = jax.random.split(key, count)
    out = []
    for k in keys:
        k_len, k_val, k_tie = jax.random.split(k, 3)
        m = int(jax.random.randint(k_len, (), 1, max_len + 1))
        values = np.asarray(jax.random.uniform(k_val, (m,), minval=-5.0, maxval=5.0))
        # Rounded copies produce repeated values and plateaus.
        if bool(jax.random.bernoulli(k_tie)):
            values = np.round(values)
        out.append(values)
    return out


def oracle_equivalence(key, count: int, vq_fn: VqFn = vq_exact) -> SuiteResult:
    worst, failures = 0.0, 0
    for i, a in enumerate(_random_sequences(key, count)):
        q = Q_VALUES[i % len(Q_VALUES)]
        err = relative_error(vq_fn(a, q), vq_oracle(a, q))
        worst = max(worst, err)
        failures += int(not err <= EXACT_TOL)
    return SuiteResult("oracle_equivalence", count, failures, {"worst_error": worst})


def pruning(key, count: int, vq_fn: VqFn = vq_exact) -> SuiteResult:
    worst, failures = 0.0, 0
    for i, a in enumerate(_random_sequences(key, count)):
        q = Q_VALUES[i % len(Q_VALUES)]
        err = relative_error(vq_fn(a[extrema_prune(a)], q), vq_fn(a, q))
        worst = max(worst, err)
        failures += int(not err <= EXACT_TOL)
    return SuiteResult("pruning", count, failures, {"worst_error": worst})


def czd_battery(key, count: int) -> SuiteResult:
    failures, failed_checks = 0, set()
    for k in jax.random.split(key, count):
        k_dim, k_n, k_val, k_mask, k_lam = jax.random.split(k, 5)
        d = int(jax.random.randint(k_dim, (), 1, 3))
        n = 2 ** int(jax.random.randint(k_n, (), 3, 7 if d == 1 else 6))
        grid = make_grid(d, n, h=1.0)
        sparse = jax.random.bernoulli(k_mask, 0.2, grid.shape)
        values = np.asarray(jax.random.normal(k_val, grid.shape) * 10 * sparse)
        f = grid_function(grid, values)
        root = float(np.abs(values).mean())
        lam = max(root, 1e-3) * float(jax.random.uniform(k_lam, (), minval=1.01, maxval=8.0))
        report = verify_czd(cz_decompose(f, lam), f)
        if not report.passed:
            failures += 1
            failed_checks.update(report.failures())
    return SuiteResult("czd", count, failures, {"failed_checks": sorted(failed_checks)})


def aol_battery(key, count: int) -> SuiteResult:
    failures, worst = 0, 0.0
    for i, k in enumerate(jax.random.split(key, count)):
        k_size, k_inst = jax.random.split(k)
        num_k, num_j = (int(s) for s in jax.random.randint(k_size, (2,), 1, 7))
        r = AOL_EXPONENTS[i % len(AOL_EXPONENTS)]
        inst = random_aol_instance(k_inst, num_k, num_j, dim=4, r=r)
        report = aol_check(inst.h_norms, inst.delta, inst.omega, r, inst.group_norms)
        failures += int(not report.passed)
        if report.rhs > 0:
            worst = max(worst, report.lhs / report.rhs)
    return SuiteResult("aol", count, failures, {"worst_lhs_over_rhs": worst})


def _lemma_sup(grid_n: int, draws) -> float:
    grid = make_grid(1, grid_n, length=16.0)
    weights = a1_battery(grid)
    names = sorted(weights)
    sup = 0.0
    for choice, x0, r, alpha in draws:
        w = weights[names[choice % len(names)]]
        ratio = standard_lemma_ratio(w, (x0,), r, alpha, dyadic_cubes(grid))
        if not math.isfinite(ratio):
            return math.inf
        sup = max(sup, ratio)
    return sup


def standard_lemma(key, count: int) -> SuiteResult:
    """Tail-integral lemma over the A_1 battery, at n = 128 and n = 256."""
    draws = []
    for i, k in enumerate(jax.random.split(key, count)):
        k_w, k_x, k_r = jax.random.split(k, 3)
        draws.append(
            (
                int(jax.random.randint(k_w, (), 0, 64)),
                float(jax.random.uniform(k_x, (), minval=-4.0, maxval=4.0)),
                float(jax.random.uniform(k_r, (), minval=0.5, maxval=4.0)),
                LEMMA_DECAYS[i % len(LEMMA_DECAYS)],
            )
        )
    coarse, fine = _lemma_sup(128, draws), _lemma_sup(256, draws)
    stable = math.isfinite(coarse) and math.isfinite(fine) and (
        max(coarse / fine, fine / coarse) <= 2.0
    )
    detail = {"sup_ratio_128": coarse, "sup_ratio_256": fine}
    return SuiteResult("standard_lemma", count, int(not stable), detail)


def maximal_comparability(key, count: int) -> SuiteResult:
    failures = 0
    for k in jax.random.split(key, count):
        k_n, k_val = jax.random.split(k)
        n = 2 ** int(jax.random.randint(k_n, (), 1, 7))
        grid = make_grid(1, n, h=1.0)
        f = grid_function(grid, jax.random.exponential(k_val, (n,)))
        dyadic = np.asarray(hl_maximal(f, dyadic_cubes(grid)).values)
        full = np.asarray(hl_maximal(f, all_windows(grid)).values)
        lower, upper = comparability(dyadic, full)
        failures += int(not (lower and upper))
    return SuiteResult("comparability", count, failures, {})


def run_selftest(
    quick: bool = False,
    counts: Optional[Dict[str, int]] = None,
    seed: int = 0,
    vq_fn: VqFn = vq_exact,
) -> SelftestReport:
    """Run every suite; `vq_fn` replaces the dynamic program under test."""
    start = time.perf_counter()
    counts = {**(QUICK_COUNTS if quick else FULL_COUNTS), **(counts or {})}
    for name, count in counts.items():
        if name not in FULL_COUNTS:
            raise ConfigError(f"Unknown selftest suite {name}.")
        if count < 1:
            raise ConfigError(f"The {name} battery is empty; counts must be >= 1.")
    keys = dict(zip(FULL_COUNTS, jax.random.split(jax.random.PRNGKey(seed), len(FULL_COUNTS))))
    suites = {
        "oracle_equivalence": lambda: oracle_equivalence(
            keys["oracle_equivalence"], counts["oracle_equivalence"], vq_fn
        ),
        "pruning": lambda: pruning(keys["pruning"], counts["pruning"], vq_fn),
        "czd": lambda: czd_battery(keys["czd"], counts["czd"]),
        "aol": lambda: aol_battery(keys["aol"], counts["aol"]),
        "standard_lemma": lambda: standard_lemma(
            keys["standard_lemma"], counts["standard_lemma"]
        ),
        "comparability": lambda: maximal_comparability(
            keys["comparability"], counts["comparability"]
        ),
    }
    results = {}
    for name, suite in suites.items():
        results[name] = suite()
        logging.info(
            "selftest %s: %d/%d failures.", name, results[name].failures, results[name].count
        )
    return SelftestReport(suites=results, runtime=time.perf_counter() - start)
