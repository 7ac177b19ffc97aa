from .experiment import Experiment, ExperimentParams, RatioReport
from .strong_type import StrongType
from .weak_type import WeakType
from .bmo import BMOEndpoint
from .vector import VectorValued
from .domination import Domination, DominationReport
from .sharp import SharpDomination
from .selftest import SelftestReport, run_selftest


__all__ = [
    "Experiment",
    "ExperimentParams",
    "RatioReport",
    "StrongType",
    "WeakType",
    "BMOEndpoint",
    "VectorValued",
    "Domination",
    "DominationReport",
    "SharpDomination",
    "SelftestReport",
    "run_selftest",
]
