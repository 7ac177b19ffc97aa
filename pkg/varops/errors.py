class DimensionError(ValueError):
    """Grids, ladders or array shapes do not match."""


class ParameterError(ValueError):
    """A numerical parameter is outside its admissible range."""


class SizeError(ValueError):
    """Input is too large for an exhaustive computation."""


class WeightConstructionError(ValueError):
    """A weight cannot be sampled on the requested grid."""


class LevelTooLowError(ValueError):
    """Decomposition level lies below the average of |f| over the root box."""

    def __init__(self, level: float, min_level: float):
        self.level = level
        self.min_level = min_level
        super().__init__(
            f"Level {level} is below the root average of |f|; "
            f"use a level of at least {min_level}."
        )


class ConfigError(ValueError):
    """Experiment configuration is invalid."""


class WeightNotAdmissibleError(ConfigError):
    """Weight constants are not stable under grid refinement."""
