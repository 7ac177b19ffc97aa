from varops.experiments.experiment import (
    Experiment,
    ExperimentParams,
    Input,
    Setting,
)
from varops.grid import lp_norm
from varops.variation import vq_field


class StrongType(Experiment):
    """Weighted L^p bound for the q-variation of an operator family:
    ||V_q T f||_{L^p(w)} / ||f||_{L^p(w)} with w in A_p."""

    weight_condition = "ap"

    @property
    def default_params(self) -> ExperimentParams:
        return ExperimentParams(p=2.0, q=3.0)

    def ratio(self, f: Input, setting: Setting, params: ExperimentParams) -> float:
        v = vq_field(setting.operator(f, setting.ladder), params.q)
        return lp_norm(v, params.p, setting.weight) / lp_norm(f, params.p, setting.weight)
