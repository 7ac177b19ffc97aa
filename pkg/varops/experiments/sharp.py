
import jax.numpy as jnp

from varops.errors import ConfigError
from varops.experiments.experiment import (
    Experiment,
    ExperimentParams,
    Input,
    Setting,
)
from varops.maximal import mr_maximal, sharp_maximal
from varops.variation import vq_field


class SharpDomination(Experiment):
    """Pointwise sharp-function estimate (V_q T f)^sharp <= C M_r f, 1 < r < q.
    The ratio is sup_x (V_q T f)^sharp(x) / M_r f(x)."""

    @property
    def default_params(self) -> ExperimentParams:
        return ExperimentParams(
            q=3.0, r=1.5, operator={"kind": "kernel", "preset": "hilbert"}
        )

    def validate(self, params: ExperimentParams) -> None:
        super().validate(params)
        if not 1 < params.r < params.q:
            raise ConfigError(f"M_r needs 1 < r < q, got r={params.r}, q={params.q}.")

    def ratio(self, f: Input, setting: Setting, params: ExperimentParams) -> float:
        v = vq_field(setting.operator(f, setting.ladder), params.q)
        sharp = sharp_maximal(v, setting.cubes).values
        m = mr_maximal(f, params.r, setting.cubes).values
        return float(jnp.max(jnp.where(m > 0, sharp / jnp.where(m > 0, m, 1.0), 0.0)))
