"""Risk-averse CVaR learning in convex games (Python front end to the C++ core)."""

import json

from . import _cvarlearn
from ._cvarlearn import (
    ConfigError,
    StateError,
    UnsupportedError,
    cournot_equilibrium,
    dkw_confidence_width,
    empirical_cvar,
    empirical_var,
    fit_rate,
    game_names,
    running_average,
    uniform_var_cvar,
)

__all__ = [
    "ConfigError",
    "StateError",
    "UnsupportedError",
    "cournot_equilibrium",
    "dkw_confidence_width",
    "empirical_cvar",
    "empirical_var",
    "fit_rate",
    "game_names",
    "resolve_config",
    "run_experiment",
    "run_trace",
    "running_average",
    "uniform_var_cvar",
]


def resolve_config(config):
    """Validate a config dict and return it with every default filled in."""
    return json.loads(_cvarlearn.resolve_config(json.dumps(config)))


def run_trace(config, algorithm="algorithm1", trial=0):
    """Run one trial; returns a dict with numpy arrays x, var_estimate and (when known) sq_error."""
    return _cvarlearn.run_trace(json.dumps(config), algorithm, trial)


def run_experiment(config, output=""):
    """Run every trial and write the output bundle; returns the bound report rows."""
    return _cvarlearn.run_experiment(json.dumps(config), output)
