import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import jax.numpy as jnp
from absl import logging
from flax import struct

from varops.errors import (
    ConfigError,
    WeightConstructionError,
    WeightNotAdmissibleError,
)
from varops.grid import Grid, GridFunction, SequenceGridFunction, refine
from varops.maximal import CubeFamily, dyadic_cubes
from varops.utils.battery import Instance, kind_counts, make_battery, realize
from varops.utils.config import (
    OperatorFn,
    build_grid,
    build_ladder,
    build_operator,
    num_threads,
)
from varops.variation import TruncationLadder
from varops.weights import Weight, weight_from_spec, weight_stability

INVARIANCE_TOL = 1e-10

Input = Union[GridFunction, SequenceGridFunction]


@struct.dataclass
class ExperimentParams:
    d: int = 1
    n: int = 256
    length: float = 16.0
    ladder_density: int = 8  # rungs per octave
    p: float = 2.0
    q: float = 3.0
    rho: float = 2.0
    r: float = 1.5  # exponent of M_r
    mode: str = "strong"  # strong | weak, vector experiment only
    num_components: int = 1
    weight: dict = struct.field(
        pytree_node=False, default_factory=lambda: {"kind": "unit"}
    )
    operator: dict = struct.field(
        pytree_node=False, default_factory=lambda: {"kind": "ball_average"}
    )
    battery: dict = struct.field(
        pytree_node=False,
        default_factory=lambda: {"kinds": ["spike", "bump", "step", "cube"], "count": 8, "seed": 0},
    )
    stability_factor: float = 2.0
    weight_check_doublings: int = 3
    invariance_scale: float = 10.0
    output: Optional[str] = None


class Row(NamedTuple):
    instance_id: str
    seed: int
    ratio: float
    n: int
    ladder_density: int


@struct.dataclass
class RatioReport:
    experiment: str
    rows: Tuple[Row, ...]
    sup_ratio: float
    refinement_factor: float
    ladder_factor: float
    invariance_error: float
    weight_check: dict
    failures: Tuple[str, ...]
    runtime: float

    @property
    def passed(self) -> bool:
        return len(self.failures) == 0

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "experiment": self.experiment,
            "rows": [
                {**row._asdict(), "ratio": _json_float(row.ratio)} for row in self.rows
            ],
            "sup_ratio": _json_float(self.sup_ratio),
            "refinement_factor": _json_float(self.refinement_factor),
            "ladder_factor": _json_float(self.ladder_factor),
            "invariance_error": _json_float(self.invariance_error),
            "weight_check": self.weight_check,
            "failures": list(self.failures),
            "passed": self.passed,
        }
        if timing:
            out["runtime"] = self.runtime
        return out


def _json_float(x: float):
    return x if math.isfinite(x) else str(x)


class Setting(NamedTuple):
    """Everything a ratio needs on one grid and ladder."""

    grid: Grid
    ladder: TruncationLadder
    operator: OperatorFn
    weight: Optional[Weight]
    cubes: CubeFamily


def stability_factor(a: float, b: float) -> float:
    """max(a/b, b/a), with 1 for two zeros."""
    if a == 0 and b == 0:
        return 1.0
    if a == 0 or b == 0:
        return math.inf
    return max(a / b, b / a)


def evaluate_concurrently(fn: Callable, jobs: Sequence) -> List:
    """Map `fn` over `jobs` on a thread pool; results keep the job order."""
    with ThreadPoolExecutor(max_workers=num_threads()) as pool:
        return list(pool.map(fn, jobs))


class Experiment(object):
    """Abstract base class for all varops ratio experiments."""

    # Weight condition checked for refinement stability before a run.
    weight_condition: Optional[str] = None

    @property
    def name(self) -> str:
        return type(self).__name__

    @property
    def default_params(self) -> ExperimentParams:
        return ExperimentParams()

    def params_from_config(self, config: Dict) -> ExperimentParams:
        """Override the default parameters with the keys of a config."""
        fields = set(ExperimentParams.__dataclass_fields__)
        unknown = sorted(set(config) - fields)
        if unknown:
            raise ConfigError(f"Unknown config keys for {self.name}: {unknown}.")
        return self.default_params.replace(**config)

    def validate(self, params: ExperimentParams) -> None:
        if not 2 < params.q < math.inf:
            raise ConfigError(f"Variation experiments need 2 < q < inf, got q={params.q}.")
        if not 1 < params.p < math.inf:
            raise ConfigError(f"p must lie in (1, inf), got p={params.p}.")
        if params.ladder_density < 1:
            raise ConfigError("ladder_density must be at least 1.")

    def condition(self, params: ExperimentParams) -> Optional[str]:
        return self.weight_condition

    def check_weight(self, params: ExperimentParams, grid: Grid) -> dict:
        """Refuse weights whose constant grows under grid refinement."""
        condition = self.condition(params)
        if condition is None:
            return {}
        try:
            constants, growth, stable = weight_stability(
                params.weight,
                grid,
                condition,
                p=params.p,
                doublings=params.weight_check_doublings,
                factor=params.stability_factor,
            )
        except WeightConstructionError as err:
            raise ConfigError(str(err)) from err
        logging.info(
            "%s weight check (%s): constants %s, growth %.4g.",
            self.name, condition, constants, growth,
        )
        if not stable:
            raise WeightNotAdmissibleError(
                f"The {condition} constant of weight {params.weight} grows by "
                f"{growth:.4g} under refinement (allowed {params.stability_factor})."
            )
        return {"condition": condition, "constants": constants, "growth": growth}

    def setting(
        self, params: ExperimentParams, grid: Grid, density: int, operator: OperatorFn
    ) -> Setting:
        try:
            weight = weight_from_spec(grid, params.weight)
        except WeightConstructionError as err:
            raise ConfigError(str(err)) from err
        return Setting(
            grid=grid,
            ladder=build_ladder(grid, density),
            operator=operator,
            weight=weight,
            cubes=dyadic_cubes(grid),
        )

    def instance_input(
        self, instance: Instance, grid: Grid, params: ExperimentParams
    ) -> Input:
        return realize(instance, grid)

    def ratio(self, f: Input, setting: Setting, params: ExperimentParams) -> float:
        """Experiment-specific ratio for one input."""
        raise NotImplementedError

    def _is_zero(self, f: Input) -> bool:
        values = f.values if isinstance(f, GridFunction) else f.components
        return not bool(jnp.any(values != 0))

    def run(self, params: Optional[ExperimentParams] = None) -> RatioReport:
        """Ratios over the battery on grid n, on 2n and with a doubled ladder."""
        start = time.perf_counter()
        params = self.default_params if params is None else params
        self.validate(params)
        grid = build_grid(params.d, params.n, params.length)
        weight_check = self.check_weight(params, grid)
        battery = make_battery(params.battery)
        operator = build_operator(params.operator, params.d)
        settings = {
            "base": self.setting(params, grid, params.ladder_density, operator),
            "refined": self.setting(params, refine(grid), params.ladder_density, operator),
            "ladder": self.setting(params, grid, 2 * params.ladder_density, operator),
        }
        active = [
            inst for inst in battery
            if not self._is_zero(self.instance_input(inst, grid, params))
        ]
        if not active:
            raise ConfigError("Every battery input vanishes; the battery is degenerate.")
        logging.info(
            "%s: %d instances %s, n=%d, %d rungs.",
            self.name, len(active), kind_counts(active), params.n,
            len(settings["base"].ladder),
        )

        jobs = [(label, inst) for label in settings for inst in active]

        def job_ratio(job):
            label, inst = job
            s = settings[label]
            return self.ratio(self.instance_input(inst, s.grid, params), s, params)

        ratios = evaluate_concurrently(job_ratio, jobs)

        rows, sups = [], {label: 0.0 for label in settings}
        for (label, inst), value in zip(jobs, ratios):
            s = settings[label]
            density = params.ladder_density * (2 if label == "ladder" else 1)
            rows.append(Row(inst.instance_id, inst.seed, value, s.grid.n, density))
            sups[label] = max(sups[label], value)
        rows.sort(key=lambda row: (row.instance_id, row.n, row.ladder_density))

        first = self.instance_input(active[0], grid, params)
        base = self.ratio(first, settings["base"], params)
        scaled = self.ratio(params.invariance_scale * first, settings["base"], params)
        invariance = abs(scaled - base) if base == 0 else abs(scaled / base - 1.0)

        refinement = stability_factor(sups["base"], sups["refined"])
        ladder = stability_factor(sups["base"], sups["ladder"])
        failures = []
        if not all(math.isfinite(r.ratio) and r.ratio >= 0 for r in rows):
            failures.append("nonfinite_ratio")
        if refinement > params.stability_factor:
            failures.append("refinement_stability")
        if ladder > params.stability_factor:
            failures.append("ladder_stability")
        if invariance > INVARIANCE_TOL:
            failures.append("scale_invariance")
        report = RatioReport(
            experiment=self.name,
            rows=tuple(rows),
            sup_ratio=sups["base"],
            refinement_factor=refinement,
            ladder_factor=ladder,
            invariance_error=invariance,
            weight_check=weight_check,
            failures=tuple(failures),
            runtime=time.perf_counter() - start,
        )
        logging.info(
            "%s: sup ratio %.6g, refinement %.4g, ladder %.4g, passed=%s.",
            self.name, report.sup_ratio, refinement, ladder, report.passed,
        )
        return report
