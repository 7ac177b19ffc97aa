from varops.experiments.experiment import (
    Experiment,
    ExperimentParams,
    Input,
    Setting,
)
from varops.grid import level_grid, lp_norm, weak_l1_constant
from varops.variation import vq_field


class WeakType(Experiment):
    """Weighted weak (1,1) bound with w in A_1:
    sup_lam lam * w({V_q T f > lam}) / ||f||_{L^1(w)} over a geometric level grid."""

    weight_condition = "a1"

    @property
    def default_params(self) -> ExperimentParams:
        return ExperimentParams(
            q=3.0,
            operator={"kind": "kernel", "preset": "hilbert"},
            battery={"kinds": ["spike"], "count": 20, "seed": 0},
        )

    def ratio(self, f: Input, setting: Setting, params: ExperimentParams) -> float:
        v = vq_field(setting.operator(f, setting.ladder), params.q)
        numerator = weak_l1_constant(v, setting.weight, level_grid(v))
        return numerator / lp_norm(f, 1, setting.weight)
