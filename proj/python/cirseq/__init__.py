"""Truncated sequential estimators for the drift of a CIR process."""

import json

from ._cirseq import (
    ConfigError,
    L_m,
    ModelParams,
    ParamRegion,
    accuracy_a,
    accuracy_b,
    mu_a_theta,
    optimal_threshold,
    poisson_solution,
    r_threshold,
    sample_transitions,
    simulate_path,
    stationary_moment,
    transient_moment,
    transition_mean,
    transition_variance,
    u_star,
)
from . import _cirseq

__all__ = [
    "ConfigError",
    "L_m",
    "ModelParams",
    "ParamRegion",
    "accuracy_a",
    "accuracy_b",
    "compare",
    "dump_constants",
    "estimate",
    "mu_a_theta",
    "optimal_threshold",
    "poisson_solution",
    "r_threshold",
    "sample_transitions",
    "simulate",
    "simulate_path",
    "stationary_moment",
    "transient_moment",
    "transition_mean",
    "transition_variance",
    "u_star",
    "verify_bounds",
]


def _keys(config, extra):
    # Same keys as the CLI config files; values may be numbers or strings.
    # Keyword arguments override entries of the mapping.
    out = {}
    for key, value in {**(config or {}), **extra}.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        out[str(key)] = value if isinstance(value, str) else repr(value)
    return out


def estimate(config=None, **keys):
    """Run the configured procedure and return the report as a dict."""
    return json.loads(_cirseq._estimate(_keys(config, keys)))


def compare(config=None, **keys):
    """Truncated sequential rule against the fixed-horizon MLE."""
    return json.loads(_cirseq._compare(_keys(config, keys)))


def verify_bounds(config=None, **keys):
    """Concentration, stopping-tail and Poisson-equation checks."""
    return json.loads(_cirseq._verify_bounds(_keys(config, keys)))


def simulate(config=None, **keys):
    """Ergodic averages over simulated paths."""
    return json.loads(_cirseq._simulate(_keys(config, keys)))


def dump_constants(config=None, **keys):
    """Every bound constant for the config; independent of the seed."""
    return json.loads(_cirseq._dump_constants(_keys(config, keys)))
