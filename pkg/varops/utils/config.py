import os
from typing import Callable

import yaml
from absl import logging

from varops.errors import ConfigError, DimensionError, ParameterError
from varops.grid import Grid, GridFunction, make_grid
from varops.operators import (
    approx_identity_family,
    average_family,
    ball_combination_from_spec,
    cube_average_family,
    kernel_from_spec,
    singular_family,
)
from varops.variation import TruncationLadder, VariationFamily, default_ladder

OPERATOR_KINDS = ("ball_average", "cube_average", "kernel", "ball_combination")


def load_config(config_fname: str) -> dict:
    """Load an experiment configuration (YAML or JSON) into a dict."""
    try:
        with open(config_fname) as file:
            config = yaml.safe_load(file)
    except (OSError, yaml.YAMLError) as err:
        raise ConfigError(f"Cannot read config {config_fname}: {err}") from err
    if not isinstance(config, dict):
        raise ConfigError(f"Config {config_fname} must hold a mapping.")
    logging.info("Loaded config %s.", config_fname)
    return config


def num_threads() -> int:
    """Thread cap from VAROPS_THREADS, else the number of CPUs."""
    value = os.environ.get("VAROPS_THREADS")
    if value is None:
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError(f"VAROPS_THREADS must be an integer, got {value!r}.")
    if threads < 1:
        raise ConfigError(f"VAROPS_THREADS must be positive, got {threads}.")
    return threads


def build_grid(d: int, n: int, length: float) -> Grid:
    try:
        return make_grid(d, n, length=length)
    except (ParameterError, DimensionError) as err:
        raise ConfigError(str(err)) from err


def build_ladder(grid: Grid, ladder_density: int) -> TruncationLadder:
    try:
        return default_ladder(grid, ladder_density)
    except ParameterError as err:
        raise ConfigError(str(err)) from err


OperatorFn = Callable[[GridFunction, TruncationLadder], VariationFamily]


def build_operator(spec: dict, d: int) -> OperatorFn:
    """Map an operator spec to (f, ladder) -> family of operator values."""
    kind = spec.get("kind")
    if kind not in OPERATOR_KINDS:
        raise ConfigError(f"Operator kind must be one of {OPERATOR_KINDS}, got {kind}.")
    try:
        if kind == "ball_average":
            return average_family
        if kind == "cube_average":
            return cube_average_family
        if kind == "kernel":
            K = kernel_from_spec(spec)
            if K.d != d:
                raise ConfigError(f"Kernel dimension {K.d} does not match d={d}.")
            return lambda f, ladder: singular_family(f, K, ladder)
        phi = ball_combination_from_spec(spec, d)
        return lambda f, ladder: approx_identity_family(f, phi, ladder)
    except (ParameterError, DimensionError, KeyError) as err:
        raise ConfigError(f"Invalid operator spec {spec}: {err}") from err
