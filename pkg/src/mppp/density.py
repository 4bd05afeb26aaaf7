"""
Gaussian kernel density estimates of one-dimensional samples and their modes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numba
import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)

# Steps between exact exp() evaluations in the kernel-sum recurrence.
_RESYNC = 4


class DegenerateSampleError(ValueError):
    """All samples are equal; `value` is the common value (use it as the mode)."""

    def __init__(self, value):
        self.value = value
        super().__init__(f"all samples equal {value!r}; density is degenerate")


@dataclass(frozen=True)
class KdeConfig:
    """
    Parameters
    ----------
    n_grid : int
        Number of evaluation points.
    bandwidth : "silverman" or float
        Either the normal-reference rule or a fixed bandwidth ``h > 0``.
    grid_pad : float
        The grid spans ``[min - grid_pad*h, max + grid_pad*h]``.
    refine : bool
        Refine the grid argmax with a parabola through its neighbours.
    """

    n_grid: int = 100
    bandwidth: object = "silverman"
    grid_pad: float = 3.0
    refine: bool = False

    def __post_init__(self):
        if int(self.n_grid) != self.n_grid or self.n_grid < 16:
            raise ValueError("n_grid must be an integer >= 16")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "silverman":
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError("fixed bandwidth must be > 0")
        if not (np.isfinite(self.grid_pad) and self.grid_pad >= 0):
            raise ValueError("grid_pad must be >= 0")


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    n_samples: int

    @property
    def spacing(self):
        return self.grid[1] - self.grid[0]


def silverman_bandwidth(samples):
    """``1.06 * min(std, IQR / 1.34) * n**(-1/5)``.

    Falls back to the standard deviation alone when the IQR is zero.
    """
    x = np.asarray(samples, dtype=float)
    std = np.std(x, ddof=1)
    q25, q75 = np.percentile(x, [25, 75])
    spread = min(std, (q75 - q25) / 1.34) if q75 > q25 else std
    return 1.06 * spread * len(x) ** -0.2


@numba.njit(cache=True, nogil=True)
def _kernel_sums(lo, step, n_grid, samples, h):
    # sum_m exp(-u^2 / 2), u = (lo + k*step - x_m) / h, for each grid index k.
    # Walk outward from the grid point nearest each sample; between exact
    # evaluations, exp(-(u + d)^2 / 2) = exp(-u^2 / 2) * r with
    # r = exp(-u*d - d^2/2) and r shrinking by exp(-d^2) per step.
    out = np.zeros(n_grid)
    d = step / h
    shrink = np.exp(-d * d)
    for x in samples:
        k0 = int(np.floor((x - lo) / step + 0.5))
        k0 = min(max(k0, 0), n_grid - 1)
        # upward, k0 .. n_grid-1
        k = k0
        while k < n_grid:
            u = (lo + k * step - x) / h
            term = np.exp(-0.5 * u * u)
            if term == 0.0:
                break
            ratio = np.exp(-u * d - 0.5 * d * d)
            out[k] += term
            k += 1
            for _ in range(_RESYNC - 1):
                if k >= n_grid:
                    break
                term *= ratio
                ratio *= shrink
                out[k] += term
                k += 1
        # downward, k0-1 .. 0
        k = k0 - 1
        while k >= 0:
            u = (lo + k * step - x) / h
            term = np.exp(-0.5 * u * u)
            if term == 0.0:
                break
            ratio = np.exp(u * d - 0.5 * d * d)
            out[k] += term
            k -= 1
            for _ in range(_RESYNC - 1):
                if k < 0:
                    break
                term *= ratio
                ratio *= shrink
                out[k] += term
                k -= 1
    return out


def kde(samples, config=KdeConfig()):
    """Gaussian KDE of `samples` on a uniform grid.

    ``values[k] = 1/(n h) * sum_m phi((grid[k] - samples[m]) / h)``.

    Raises
    ------
    DegenerateSampleError
        All samples equal.
    ValueError
        Fewer than two samples or non-finite samples.
    """
    x = np.ascontiguousarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("kde needs at least 2 samples")
    if not np.isfinite(x).all():
        raise ValueError("kde samples must be finite")
    xmin, xmax = x.min(), x.max()
    if xmin == xmax:
        raise DegenerateSampleError(float(xmin))
    if config.bandwidth == "silverman":
        h = silverman_bandwidth(x)
    else:
        h = float(config.bandwidth)
    lo = xmin - config.grid_pad * h
    hi = xmax + config.grid_pad * h
    step = (hi - lo) / (config.n_grid - 1)
    grid = lo + step * np.arange(config.n_grid)
    sums = _kernel_sums(lo, step, config.n_grid, x, h)
    return DensityEstimate(grid, sums / (x.size * h * SQRT_2PI), h, x.size)


def mode_of(est, refine=False):
    """Grid point of largest density; ties go to the smallest grid point.

    With `refine`, the vertex of the parabola through the argmax and its two
    neighbours is returned instead (interior maxima only).
    """
    values = np.asarray(est.values)
    k = int(np.argmax(values))
    if not refine or k == 0 or k == len(values) - 1:
        return float(est.grid[k])
    a, b, c = values[k - 1], values[k], values[k + 1]
    denom = a - 2 * b + c
    if denom >= 0:
        return float(est.grid[k])
    shift = 0.5 * (a - c) / denom
    return float(est.grid[k] + shift * (est.grid[1] - est.grid[0]))


def is_multimodal(est, rel=0.05):
    """True when a second local maximum reaches within `rel` of the global max."""
    v = np.asarray(est.values)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])
    peaks = list(v[1:-1][inner])
    if v[0] > v[1]:
        peaks.append(v[0])
    if v[-1] > v[-2]:
        peaks.append(v[-1])
    if len(peaks) < 2:
        return False
    peaks.sort()
    return peaks[-2] >= (1 - rel) * peaks[-1]


def write_density_csv(rows, path, header_lines=()):
    """Write ``(t, DensityEstimate)`` pairs as ``t,grid_point,density`` rows."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "grid_point", "density"))
        for t, est in rows:
            for g, v in zip(est.grid, est.values):
                w.writerow((repr(float(t)), repr(float(g)), repr(float(v))))
