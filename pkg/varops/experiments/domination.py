import time
from typing import Optional, Tuple

import jax.numpy as jnp
from absl import logging
from flax import struct

from varops.errors import ConfigError, ParameterError
from varops.experiments.experiment import (
    Experiment,
    ExperimentParams,
    Row,
    evaluate_concurrently,
)
from varops.grid import GridFunction
from varops.operators import (
    BallCombination,
    approx_identity_family,
    average_family,
    ball_combination_from_spec,
)
from varops.utils.battery import make_battery, realize
from varops.utils.config import build_grid, build_ladder
from varops.variation import TruncationLadder, make_ladder, vq_field

MAX_CLOSURE_RUNGS = 4096
VIOLATION_TOL = 1e-10


def closure_ladder(ladder: TruncationLadder, phi: BallCombination) -> TruncationLadder:
    """The ladder together with every rung scaled by every radius of phi."""
    rungs = set(ladder.t_values)
    for r in phi.radii:
        rungs.update(ladder.scaled(r).t_values)
    if len(rungs) > MAX_CLOSURE_RUNGS:
        raise ConfigError(
            f"The closed ladder has {len(rungs)} rungs (max {MAX_CLOSURE_RUNGS}); "
            "use fewer radii or a sparser ladder."
        )
    return make_ladder(sorted(rungs))


def domination_gap(
    f: GridFunction, phi: BallCombination, ladder: TruncationLadder, q: float
) -> Tuple[float, float]:
    """(relative violation, max ratio) of V_q(phi_t * f) <= ||phi||_1 V_q(A f).

    The right side varies over the closed ladder, so every A_{r_k t} on the
    left is one of its rungs.
    """
    lhs = vq_field(approx_identity_family(f, phi, ladder), q).values
    closed = closure_ladder(ladder, phi)
    rhs = phi.l1_norm(f.grid.d) * vq_field(average_family(f, closed), q).values
    excess = float(jnp.max(lhs - rhs))
    violation = max(0.0, excess) / (1.0 + float(jnp.max(rhs)))
    ratio = float(jnp.max(jnp.where(rhs > 0, lhs / jnp.where(rhs > 0, rhs, 1.0), 0.0)))
    return violation, ratio


@struct.dataclass
class DominationReport:
    experiment: str
    rows: Tuple[Row, ...]
    max_violation: float
    runtime: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= VIOLATION_TOL

    @property
    def failures(self) -> Tuple[str, ...]:
        return () if self.passed else ("pointwise_domination",)

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "experiment": self.experiment,
            "rows": [row._asdict() for row in self.rows],
            "max_violation": self.max_violation,
            "failures": list(self.failures),
            "passed": self.passed,
        }
        if timing:
            out["runtime"] = self.runtime
        return out


class Domination(Experiment):
    """Pointwise domination of a radial approximate identity by the ball
    averages: V_q(phi_t * f)(x) <= ||phi||_1 V_q(A_t f)(x)."""

    @property
    def default_params(self) -> ExperimentParams:
        return ExperimentParams(
            n=64,
            q=3.0,
            operator={"kind": "ball_combination", "balls": [
                {"alpha": 1.0, "r": 0.5}, {"alpha": 0.5, "r": 1.0},
            ]},
            battery={"kinds": ["spike", "bump", "step", "cube"], "count": 50, "seed": 0},
        )

    def validate(self, params: ExperimentParams) -> None:
        super().validate(params)
        if params.operator.get("kind") != "ball_combination":
            raise ConfigError("Domination needs a `ball_combination` operator.")

    def run(self, params: Optional[ExperimentParams] = None) -> DominationReport:
        start = time.perf_counter()
        params = self.default_params if params is None else params
        self.validate(params)
        grid = build_grid(params.d, params.n, params.length)
        ladder = build_ladder(grid, params.ladder_density)
        try:
            phi = ball_combination_from_spec(params.operator, params.d)
        except (ParameterError, KeyError) as err:
            raise ConfigError(f"Invalid ball combination: {err}") from err
        closure_ladder(ladder, phi)
        battery = make_battery(params.battery)

        def job(instance):
            return domination_gap(realize(instance, grid), phi, ladder, params.q)

        results = evaluate_concurrently(job, battery)
        rows = tuple(
            Row(inst.instance_id, inst.seed, ratio, grid.n, params.ladder_density)
            for inst, (_, ratio) in zip(battery, results)
        )
        report = DominationReport(
            experiment=self.name,
            rows=rows,
            max_violation=max(v for v, _ in results),
            runtime=time.perf_counter() - start,
        )
        logging.info(
            "%s: max violation %.3g over %d inputs.",
            self.name, report.max_violation, len(rows),
        )
        return report
