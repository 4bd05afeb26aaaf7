"""
Closed-form solutions for three reference systems.

``ou``
    ``dX = alpha X dt + beta dB``: Gaussian with mean ``x0 e^{alpha t}`` and
    variance ``beta^2 (e^{2 alpha t} - 1) / (2 alpha)`` (``beta^2 t`` when
    ``alpha == 0``).  The density maximizer is the mean.
``gbm``
    ``dX = mu X dt + sigma X dB``: ``X_t = x0 exp((mu - sigma^2/2) t + sigma B_t)``,
    a lognormal on the side of zero that ``x0`` lies on, with maximizer
    ``x0 exp((mu - 3 sigma^2 / 2) t)``.
``rotation2d``
    ``dX = -Y dt + dB^1, dY = X dt + dB^2``: Gaussian marginals centred on the
    deterministic rotation of ``(x0, y0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdditiveLinearParams:
    alpha: float = 1.0
    beta: float = 1.0
    x0: float = 1.0


@dataclass(frozen=True)
class GbmParams:
    mu: float = 1.0
    sigma: float = 1.0
    x0: float = 1.0

    def __post_init__(self):
        if self.x0 == 0:
            raise ValueError("x0 must be non-zero")


@dataclass(frozen=True)
class Rotation2dParams:
    x0: float = 1.0
    y0: float = 1.0


def _check_time(t, strict=False):
    if strict and not t > 0:
        raise ValueError(f"density needs t > 0, got {t}")
    if not t >= 0:
        raise ValueError(f"t must be >= 0, got {t}")


def ou_mean(p, t):
    _check_time(t)
    return math.exp(p.alpha * t) * p.x0


def ou_variance(p, t):
    _check_time(t)
    if p.alpha == 0:
        return p.beta**2 * t
    # expm1 keeps the small-alpha limit accurate
    return p.beta**2 * math.expm1(2 * p.alpha * t) / (2 * p.alpha)


def ou_density(p, t, x):
    _check_time(t, strict=True)
    mean = ou_mean(p, t)
    var = ou_variance(p, t)
    x = np.asarray(x, dtype=float)
    out = np.exp(-((x - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
    return out if out.ndim else float(out)


def ou_maximizer(p, t):
    _check_time(t)
    return math.exp(p.alpha * t) * p.x0


def gbm_mean(p, t):
    _check_time(t)
    return p.x0 * math.exp(p.mu * t)


def gbm_solution_density(p, t, x):
    _check_time(t, strict=True)
    x = np.asarray(x, dtype=float)
    ratio = np.divide(x, p.x0)
    ok = ratio > 0
    safe = np.where(ok, ratio, 1.0)
    s2t = p.sigma**2 * t
    z = np.log(safe) - (p.mu - 0.5 * p.sigma**2) * t
    dens = np.exp(-(z**2) / (2 * s2t)) / (abs(p.sigma) * np.abs(np.where(ok, x, 1.0)) * math.sqrt(2 * math.pi * t))
    out = np.where(ok, dens, 0.0)
    return out if out.ndim else float(out)


def gbm_maximizer(p, t):
    _check_time(t)
    return p.x0 * math.exp((p.mu - 1.5 * p.sigma**2) * t)


def rotation2d_most_probable(p, t):
    _check_time(t)
    c, s = math.cos(t), math.sin(t)
    return np.array([p.x0 * c - p.y0 * s, p.x0 * s + p.y0 * c])


# Named access for the CLI and the scoring step ------------------------------

PARAMS = {
    "ou": AdditiveLinearParams,
    "gbm": GbmParams,
    "rotation2d": Rotation2dParams,
}
_MAXIMIZERS = {
    "ou": lambda p, t: [ou_maximizer(p, t)],
    "gbm": lambda p, t: [gbm_maximizer(p, t)],
    "rotation2d": rotation2d_most_probable,
}
DIMENSION = {"ou": 1, "gbm": 1, "rotation2d": 2}


def most_probable_curve(name, params, times):
    """Oracle modes at `times` for a named system, shape ``(len(times), dim)``.

    `params` is a params instance or a dict of its fields.
    """
    if name not in PARAMS:
        raise KeyError(f"unknown oracle {name!r}; choose from {sorted(PARAMS)}")
    if isinstance(params, dict):
        params = PARAMS[name](**params)
    return np.array([np.asarray(_MAXIMIZERS[name](params, float(t)), dtype=float) for t in times])
