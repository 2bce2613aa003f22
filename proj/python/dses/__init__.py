"""Distributed stochastic extremum seeking.

Thin layer over the C++ core. Scenarios are plain dicts with the same layout
as the JSON files under presets/ (see schema/scenario.schema.json).
"""

import json

from . import _core
from ._core import (
    AssumptionViolation,
    ConfigError,
    DivergenceError,
    DsesError,
    InvalidInput,
    UnsupportedMode,
    aggregate_optimum,
    ergodic_moment,
    kappa,
    preset_names,
    spectral_summary,
)

__all__ = [
    "AssumptionViolation",
    "ConfigError",
    "DivergenceError",
    "DsesError",
    "InvalidInput",
    "UnsupportedMode",
    "aggregate_optimum",
    "ergodic_moment",
    "kappa",
    "load_preset",
    "normalize",
    "preset_names",
    "rate_report",
    "simulate",
    "spectral_summary",
]


def _text(scenario):
    return scenario if isinstance(scenario, str) else json.dumps(scenario)


def load_preset(name):
    return json.loads(_core.preset_text(name))


def normalize(scenario, overrides=()):
    """Validated scenario with every default filled in."""
    return json.loads(_core.normalize(_text(scenario), list(overrides)))


def simulate(scenario, overrides=()):
    """One run of `scenario` (a dict, JSON text or preset name).

    Returns a dict of numpy arrays: t (S,), z and v (S, n, m), f,
    err_tilde and err_consensus (S, n), r (S, n, n) or None, and source.
    """
    if isinstance(scenario, str) and scenario in preset_names():
        scenario = _core.preset_text(scenario)
    return _core.simulate(_text(scenario), list(overrides))


def rate_report(scenario, overrides=()):
    if isinstance(scenario, str) and scenario in preset_names():
        scenario = _core.preset_text(scenario)
    return json.loads(_core.rate_report_text(_text(scenario), list(overrides)))
