"""
Seedable Brownian increments with one independent substream per path.

Each stream is a Philox-4x64 counter-based generator keyed by
``(master_seed, stream_id)``.  Noise components of a multi-dimensional path
share the key and start at counters ``2**192`` apart, so no two streams can
overlap.  Standard normals are produced by exact inversion::

    k = floor(r / 2**11)                      # r a raw 64-bit Philox output
    z = ndtri((k + 0.5) * 2**-53)             if k <  2**52
    z = -ndtri((2**53 - k - 0.5) * 2**-53)    if k >= 2**52

The mirrored form keeps every uniform exactly representable and strictly
inside (0, 1), and makes the map antisymmetric.

This method is fixed; changing it changes every simulated path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

DEFAULT_SEED = 20140704

_U64 = 2**64
_BLOCK = 4096


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one normal-variate stream.

    Attributes
    ----------
    master_seed : int
        64-bit unsigned run seed.
    stream_id : int
        Path index; each path owns its own stream.
    component : int
        Noise component of the path (0 for scalar noise).
    """

    master_seed: int = DEFAULT_SEED
    stream_id: int = 0
    component: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) < _U64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")
        if not 0 <= int(self.component) < _U64:
            raise ValueError(f"component must be non-negative, got {self.component}")

    def bit_generator(self):
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        counter = np.array([0, 0, 0, self.component], dtype=np.uint64)
        return np.random.Philox(key=key, counter=counter)


def raw_to_normal(raw):
    """Map raw uint64 draws to standard normals by inversion."""
    k = (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64)
    upper = k >= 2.0**52
    u = np.where(upper, 2.0**53 - k - 0.5, k + 0.5) * 2.0**-53
    z = ndtri(u)
    return np.where(upper, -z, z)


class NormalStream:
    """Sequential reader over one stream; not thread-safe."""

    def __init__(self, seed):
        self.seed = seed
        self._bitgen = seed.bit_generator()

    def take(self, n):
        return raw_to_normal(self._bitgen.random_raw(n))


def standard_normals(seed, n):
    """First `n` values of the stream for `seed`."""
    return NormalStream(seed).take(n)


def gaussian_stream(seed):
    """Infinite iterator of standard normal floats for `seed`."""
    stream = NormalStream(seed)
    while True:
        yield from stream.take(_BLOCK).tolist()


@dataclass(frozen=True)
class IncrementBlock:
    dt: float
    values: np.ndarray


def brownian_increments(seed, n_steps, dt):
    """Increments ``B(t_j) - B(t_{j-1})`` of one path, each ``N(0, dt)``.

    ``values[k] == sqrt(dt) * standard_normals(seed, n_steps)[k]``, so a
    shorter request is a prefix of a longer one.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return IncrementBlock(dt, np.sqrt(dt) * standard_normals(seed, n_steps))
