from varops.errors import ConfigError
from varops.experiments.experiment import (
    Experiment,
    ExperimentParams,
    Input,
    Setting,
)
from varops.grid import Grid, level_grid, lp_norm, weak_l1_constant
from varops.utils.battery import Instance, realize_sequence
from varops.variation import vector_vq_field

MODES = ("strong", "weak")


class VectorValued(Experiment):
    """l^rho-valued extension: the operator acts on every component of a
    finite sequence and both sides are aggregated pointwise in l^rho."""

    @property
    def default_params(self) -> ExperimentParams:
        return ExperimentParams(
            p=2.0,
            q=3.0,
            rho=2.0,
            num_components=8,
            weight={"kind": "power", "alpha": 0.5},
        )

    def validate(self, params: ExperimentParams) -> None:
        super().validate(params)
        if params.mode not in MODES:
            raise ConfigError(f"Vector mode must be one of {MODES}, got {params.mode}.")
        if not params.rho > 1:
            raise ConfigError(f"rho must exceed 1, got {params.rho}.")
        if params.num_components < 1:
            raise ConfigError("The vector experiment needs at least one component.")

    def condition(self, params: ExperimentParams) -> str:
        return "ap" if params.mode == "strong" else "a1"

    def instance_input(
        self, instance: Instance, grid: Grid, params: ExperimentParams
    ) -> Input:
        return realize_sequence(instance, grid, params.num_components)

    def ratio(self, f: Input, setting: Setting, params: ExperimentParams) -> float:
        fams = [
            setting.operator(f.component(j), setting.ladder) for j in range(len(f))
        ]
        v = vector_vq_field(fams, params.q, params.rho)
        g = f.pointwise_norm(params.rho)
        if params.mode == "strong":
            return lp_norm(v, params.p, setting.weight) / lp_norm(g, params.p, setting.weight)
        numerator = weak_l1_constant(v, setting.weight, level_grid(v))
        return numerator / lp_norm(g, 1, setting.weight)
