"""
Most probable phase portraits from simulated ensembles.

For every time slice and every coordinate, estimate the marginal density of
the ensemble with a Gaussian KDE and keep its mode.  Slice 0 is the (exact)
initial state.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import oracle as orc
from .density import DegenerateSampleError, KdeConfig, is_multimodal, kde, mode_of
from .sim import check_divergence, iter_states

log = logging.getLogger(__name__)

MIN_PATHS = 100


class TooFewPathsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MpppCurve:
    """Per-slice marginal modes.

    All per-slice arrays have shape ``(N + 1, dim)``.  Slice 0 carries the
    initial state with zero bandwidth and grid spacing.
    """

    times: np.ndarray
    modes: np.ndarray
    bandwidths: np.ndarray
    spacings: np.ndarray
    multimodal: np.ndarray
    n_diverged: int = 0
    n_paths: int = 0
    densities: Optional[list] = field(default=None, repr=False)

    @property
    def dim(self):
        return self.modes.shape[1]


@dataclass(frozen=True, eq=False)
class MpppReport:
    curve: MpppCurve
    oracle_curve: Optional[np.ndarray] = None
    endpoint_rel_error: Optional[float] = None
    sup_abs_error: Optional[float] = None
    endpoint_abs_error: Optional[float] = None
    # set when the oracle endpoint is zero and endpoint_rel_error holds the absolute error
    endpoint_error_is_absolute: bool = False


def _slice_summary(samples, kcfg, keep):
    """Mode, bandwidth, spacing, multimodal flag and (optionally) estimate per coordinate."""
    out = []
    for i in range(samples.shape[1]):
        try:
            est = kde(samples[:, i], kcfg)
        except DegenerateSampleError as err:
            out.append((err.value, 0.0, 0.0, False, None))
            continue
        out.append(
            (
                mode_of(est, refine=kcfg.refine),
                est.bandwidth,
                est.spacing,
                is_multimodal(est),
                est if keep else None,
            )
        )
    return out


def _assemble(times, initial_state, summaries, n_diverged, n_paths, keep):
    n, d = len(times), len(initial_state)
    modes = np.empty((n, d))
    bandwidths = np.zeros((n, d))
    spacings = np.zeros((n, d))
    multimodal = np.zeros((n, d), dtype=bool)
    modes[0] = initial_state
    densities = [] if keep else None
    for j, per_coord in enumerate(summaries, start=1):
        for i, (mode, h, dx, multi, est) in enumerate(per_coord):
            modes[j, i] = mode
            bandwidths[j, i] = h
            spacings[j, i] = dx
            multimodal[j, i] = multi
            if keep and est is not None:
                densities.append((float(times[j]), i, est))
    return MpppCurve(times, modes, bandwidths, spacings, multimodal, n_diverged, n_paths, densities)


def compute_mppp(ens, kcfg=KdeConfig(), workers=1, keep_densities=False):
    """Marginal-mode curve of a stored `PathEnsemble`.

    Raises
    ------
    TooFewPathsError
        Fewer than 100 paths.
    """
    if ens.n_paths < MIN_PATHS:
        raise TooFewPathsError(f"need at least {MIN_PATHS} paths for KDE modes, got {ens.n_paths}")
    n = len(ens.times)

    def one(j):
        return _slice_summary(ens.states[:, j, :], kcfg, keep_densities)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            summaries = list(pool.map(one, range(1, n)))
    else:
        summaries = [one(j) for j in range(1, n)]
    initial = ens.states[0, 0, :]
    return _assemble(ens.times, initial, summaries, ens.n_diverged, ens.n_paths, keep_densities)


def compute_mppp_streaming(system, grid, kcfg=KdeConfig(), keep_densities=False):
    """Simulate and reduce slice by slice without storing the ensemble.

    Produces the same curve as ``compute_mppp(simulate(system, grid), kcfg)``.
    """
    if grid.n_paths < MIN_PATHS:
        raise TooFewPathsError(f"need at least {MIN_PATHS} paths for KDE modes, got {grid.n_paths}")
    summaries = []
    alive = None
    for j, states, alive in iter_states(system, grid):
        if j:
            summaries.append(_slice_summary(states, kcfg, keep_densities))
    n_diverged = int((~alive).sum())
    check_divergence(n_diverged, grid.n_paths)
    return _assemble(grid.times, system.initial_state, summaries, n_diverged, grid.n_paths, keep_densities)


OracleSpec = Union[str, Callable, np.ndarray]


def oracle_values(oracle, times, params=None):
    """Resolve an oracle (name, callable of times, or array) to shape ``(N + 1, dim)``."""
    if isinstance(oracle, str):
        vals = orc.most_probable_curve(oracle, params if params is not None else {}, times)
    elif callable(oracle):
        vals = oracle(np.asarray(times))
    else:
        vals = oracle
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return vals


def score_against_oracle(curve, oracle, params=None):
    """Compare a curve with oracle modes.

    ``endpoint_rel_error`` is ``max_i |modes[N, i] - oracle[N, i]| / |oracle[N, i]|``;
    ``sup_abs_error`` is the largest per-coordinate deviation over all slices.
    Where the oracle endpoint is 0 the absolute error is used for that
    coordinate and the report is flagged.
    """
    ref = oracle_values(oracle, curve.times, params)
    if ref.shape != curve.modes.shape:
        raise ValueError(f"oracle shape {ref.shape} does not match curve shape {curve.modes.shape}")
    diff = np.abs(curve.modes - ref)
    end_abs = diff[-1]
    end_ref = np.abs(ref[-1])
    zero = end_ref == 0
    rel = np.where(zero, end_abs, end_abs / np.where(zero, 1.0, end_ref))
    if zero.any():
        log.warning("oracle endpoint is zero; reporting absolute endpoint error")
    return MpppReport(
        curve=curve,
        oracle_curve=ref,
        endpoint_rel_error=float(rel.max()),
        sup_abs_error=float(diff.max()),
        endpoint_abs_error=float(end_abs.max()),
        endpoint_error_is_absolute=bool(zero.any()),
    )


def check_seed_stability(curve_a, curve_b, report_a):
    """Warn when two seeds disagree by more than 3x the oracle sup error.

    Returns the sup distance between the two curves.
    """
    dist = float(np.abs(curve_a.modes - curve_b.modes).max())
    if report_a.sup_abs_error is not None and dist > 3 * report_a.sup_abs_error:
        log.warning(
            "seed-to-seed distance %.4g exceeds 3x the oracle sup error %.4g",
            dist,
            report_a.sup_abs_error,
        )
    return dist
