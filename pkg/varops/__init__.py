import jax

jax.config.update("jax_enable_x64", True)

from .registration import make, registered_experiments  # noqa: E402
from .experiments import ExperimentParams, run_selftest  # noqa: E402
from ._version import __version__  # noqa: E402

__all__ = [
    "make",
    "registered_experiments",
    "ExperimentParams",
    "run_selftest",
    "__version__",
]
