"""Carbon-aware Age-of-Information scheduling.

Configs travel as text in the same ``key = value`` form the command-line
tool reads. ``config()`` builds one from the defaults plus overrides.
"""

from __future__ import annotations

from typing import Mapping

from . import _core
from ._core import (
    boundary,
    buffered_index,
    calibrate,
    carbon_cost,
    critical_age,
    load_trace,
    synthetic_trace,
    urgency,
    validate,
    whittle_index,
)

__all__ = [
    "boundary",
    "buffered_index",
    "calibrate",
    "carbon_cost",
    "compose_energy",
    "config",
    "critical_age",
    "kappa_grams",
    "load_trace",
    "simulate",
    "synthetic_trace",
    "urgency",
    "validate",
    "whittle_index",
]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def config(overrides: Mapping[str, object] | None = None, base: str | None = None) -> str:
    """Config text: `base` (default parameters when omitted) with `overrides` applied.

    Raises ValueError for unknown keys or values that fail validation.
    """
    text = base if base is not None else _core.default_config_text()
    for key, value in (overrides or {}).items():
        text += f"{key} = {_fmt(value)}\n"
    return _core.normalize_config(text)


def compose_energy(config_text: str | None = None) -> float:
    return _core.compose_energy(config_text or _core.default_config_text())


def kappa_grams(config_text: str | None = None) -> float:
    return _core.kappa_grams(config_text or _core.default_config_text())


def simulate(config_text: str | None = None, xi=None, *, region: str | None = None,
             policy: str = "saoithe", lambda_: float | None = None, mu: float = 0.0,
             gate: bool = True, seed: int = 1, trace_seed: int = 1, **options) -> dict:
    """Runs one horizon and returns the episode summary as a dict.

    Pass either an intensity sequence `xi` (one value per slot) or a
    synthetic `region`. SAOITHE calibrates its prices when `lambda_` is None.
    """
    text = config_text or _core.default_config_text()
    label = "custom"
    if xi is None:
        if region is None:
            raise ValueError("pass xi or region")
        import re

        horizon = int(re.search(r"^horizon_slots\s*=\s*(\d+)", text, re.M).group(1))
        slot = float(re.search(r"^slot_duration\s*=\s*([0-9.eE+-]+)", text, re.M).group(1))
        xi = _core.synthetic_trace(region, horizon, slot, trace_seed)
        label = region
    elif region is not None:
        raise ValueError("xi and region are mutually exclusive")
    return _core.simulate(text, list(xi), policy, lambda_, mu, gate, seed, label, **options)
