"""Most probable phase portraits of SDEs.

Euler-Maruyama ensembles on counter-based random substreams, per-slice
Gaussian KDE modes, and closed-form oracles for the linear examples.
"""
from .density import KdeConfig, kde, mode_of
from .expr import evaluate, parse, render
from .oracle import AdditiveLinearParams, GbmParams, Rotation2dParams, most_probable_curve
from .portrait import MpppCurve, MpppReport, compute_mppp, compute_mppp_streaming, score_against_oracle
from .presets import preset_system
from .rng import DEFAULT_SEED, SeedSpec
from .sim import SdeSystem, SimGrid, simulate

__version__ = "0.1.0"
