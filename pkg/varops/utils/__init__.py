from .battery import make_battery, realize, realize_sequence
from .config import load_config, num_threads
from .report import aggregate, write_json
from .test_helpers import (
    window_scan_ap,
    window_scan_maximal,
    window_scan_sharp,
)


__all__ = [
    "make_battery",
    "realize",
    "realize_sequence",
    "load_config",
    "num_threads",
    "aggregate",
    "write_json",
    "window_scan_ap",
    "window_scan_maximal",
    "window_scan_sharp",
]
