from .errors import ConfigError
from .experiments import (
    BMOEndpoint,
    Domination,
    SharpDomination,
    StrongType,
    VectorValued,
    WeakType,
)

# =============================================================================


def make(experiment_id: str, **experiment_kwargs):
    """Experiment instance and its default parameters, by id."""
    if experiment_id not in registered_experiments:
        raise ConfigError(
            f"{experiment_id} is not in registered varops experiments "
            f"{registered_experiments}."
        )

    # 1. Weighted inequalities for the q-variation
    if experiment_id == "strong-type":
        experiment = StrongType(**experiment_kwargs)
    elif experiment_id == "weak-type":
        experiment = WeakType(**experiment_kwargs)
    elif experiment_id == "bmo":
        experiment = BMOEndpoint(**experiment_kwargs)

    # 2. Vector-valued extension
    elif experiment_id == "vector":
        experiment = VectorValued(**experiment_kwargs)

    # 3. Pointwise estimates
    elif experiment_id == "domination":
        experiment = Domination(**experiment_kwargs)
    elif experiment_id == "sharp":
        experiment = SharpDomination(**experiment_kwargs)

    return experiment, experiment.default_params


registered_experiments = [
    "strong-type",
    "weak-type",
    "bmo",
    "vector",
    "domination",
    "sharp",
]
