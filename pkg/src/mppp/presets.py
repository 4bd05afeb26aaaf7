"""Named reference systems with their default parameters and horizons."""
from __future__ import annotations

from dataclasses import asdict

from . import oracle as orc
from .sim import SdeSystem

DEFAULT_T = {"ou": 1.0, "gbm": 1.0, "rotation2d": 2.0}


def preset_params(name, **overrides):
    """Parameter dataclass for preset `name`, with keyword overrides.

    Raises
    ------
    KeyError
        Unknown preset.
    TypeError
        A parameter name that the preset does not have.
    """
    if name not in orc.PARAMS:
        raise KeyError(name)
    return orc.PARAMS[name](**overrides)


def preset_system(name, params=None):
    """`SdeSystem` for a preset; `params` is a params instance or dict."""
    if params is None or isinstance(params, dict):
        params = preset_params(name, **(params or {}))
    p = asdict(params)
    if name == "ou":
        return SdeSystem.from_text(
            [f"({p['alpha']!r})*x"], [f"({p['beta']!r})"], [p["x0"]], label="ou"
        )
    if name == "gbm":
        return SdeSystem.from_text(
            [f"({p['mu']!r})*x"], [f"({p['sigma']!r})*x"], [p["x0"]], label="gbm"
        )
    return SdeSystem.from_text(
        ["-y", "x"], ["1", "1"], [p["x0"], p["y0"]], label="rotation2d"
    )
