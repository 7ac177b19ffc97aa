import jax.numpy as jnp

from varops.experiments.experiment import (
    Experiment,
    ExperimentParams,
    Input,
    Setting,
)
from varops.maximal import sharp_maximal
from varops.variation import vq_field


class BMOEndpoint(Experiment):
    """L^infinity endpoint with w^(-1) in A_1:
    ||(V_q T f)^sharp w||_inf / ||f w||_inf."""

    weight_condition = "a1_reciprocal"

    @property
    def default_params(self) -> ExperimentParams:
        return ExperimentParams(
            q=3.0,
            weight={"kind": "power", "alpha": 0.5},
            battery={"kinds": ["step"], "count": 8, "seed": 0},
        )

    def ratio(self, f: Input, setting: Setting, params: ExperimentParams) -> float:
        v = vq_field(setting.operator(f, setting.ladder), params.q)
        sharp = sharp_maximal(v, setting.cubes)
        w = setting.weight.values
        return float(jnp.max(sharp.values * w) / jnp.max(jnp.abs(f.values) * w))
