"""
Euler-Maruyama simulation of path ensembles.

Systems have diagonal noise: component ``i`` is driven by its own Brownian
motion ``B^i``::

    X^i_j = X^i_{j-1} + f_i(X_{j-1}, t_{j-1}) dt + g_i(X_{j-1}, t_{j-1}) dB^i_j

All components read the left-endpoint state (simultaneous update).
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .rng import DEFAULT_SEED, SeedSpec, raw_to_normal

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 0.01


class DivergenceError(RuntimeError):
    """Raised when a step produces a non-finite state.

    For a single step `component` names the offending coordinate; for a whole
    run `n_diverged` / `n_paths` give the statistic that breached the limit.
    """

    def __init__(self, message, component=None, n_diverged=None, n_paths=None):
        super().__init__(message)
        self.component = component
        self.n_diverged = n_diverged
        self.n_paths = n_paths


class VariableOutOfDimensionError(ex.ExprError):
    def __init__(self, name, dim):
        self.name = name
        self.dim = dim
        super().__init__(f"variable {name!r} is not defined for a {dim}-dimensional system")


def state_variables(dim):
    """Variable names bound to the state components for a given dimension."""
    if dim == 1:
        return ("x",)
    if dim == 2:
        return ("x", "y")
    if 3 <= dim <= len(ex.INDEXED_VARIABLES):
        return ex.INDEXED_VARIABLES[:dim]
    raise ValueError(f"unsupported dimension {dim}")


@dataclass(frozen=True)
class SdeSystem:
    """``dX^i = f_i(X, t) dt + g_i(X, t) dB^i``, ``X(0) = initial_state``."""

    drift: tuple
    diffusion: tuple
    initial_state: tuple
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "drift", tuple(self.drift))
        object.__setattr__(self, "diffusion", tuple(self.diffusion))
        object.__setattr__(self, "initial_state", tuple(float(v) for v in self.initial_state))
        d = len(self.initial_state)
        if d < 1:
            raise ValueError("system needs at least one component")
        if len(self.drift) != d or len(self.diffusion) != d:
            raise ValueError(
                f"drift and diffusion need {d} entries each, got "
                f"{len(self.drift)} and {len(self.diffusion)}"
            )
        if not all(np.isfinite(self.initial_state)):
            raise ValueError("initial state must be finite")
        allowed = set(state_variables(d)) | {"t"}
        for e in self.drift + self.diffusion:
            extra = ex.variables_of(e) - allowed
            if extra:
                raise VariableOutOfDimensionError(sorted(extra)[0], d)

    @classmethod
    def from_text(cls, drift, diffusion, initial_state, label=""):
        """Build a system from coefficient expression strings."""
        return cls(
            tuple(ex.parse(s) for s in drift),
            tuple(ex.parse(s) for s in diffusion),
            initial_state,
            label,
        )

    @property
    def dim(self):
        return len(self.initial_state)

    def coefficients(self, states, t, on_domain="nan"):
        """Drift and diffusion at `states` (shape ``(..., dim)``) and time `t`."""
        states = np.asarray(states, dtype=float)
        env = {name: states[..., i] for i, name in enumerate(state_variables(self.dim))}
        env["t"] = np.float64(t)
        f = np.stack([ex.evaluate_array(e, env, on_domain) for e in self.drift], axis=-1)
        g = np.stack([ex.evaluate_array(e, env, on_domain) for e in self.diffusion], axis=-1)
        return f, g


@dataclass(frozen=True)
class SimGrid:
    T: float
    n_steps: int
    n_paths: int
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("horizon T must be > 0")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        SeedSpec(self.seed)

    @property
    def dt(self):
        return self.T / self.n_steps

    @property
    def times(self):
        times = self.T * np.arange(self.n_steps + 1) / self.n_steps
        times[-1] = self.T
        return times


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Simulated states, shape ``(M, N + 1, dim)``, on a shared time axis."""

    times: np.ndarray
    states: np.ndarray
    label: str
    grid: SimGrid
    diverged: np.ndarray = field(repr=False)

    @property
    def n_paths(self):
        return self.states.shape[0]

    @property
    def dim(self):
        return self.states.shape[2]

    @property
    def n_diverged(self):
        return int(self.diverged.sum())


def em_step(state, t, system, dt, dB):
    """One Euler-Maruyama step for a single state vector.

    Raises
    ------
    DivergenceError
        If any component of the result is not finite.
    """
    state = np.asarray(state, dtype=float).reshape(system.dim)
    dB = np.asarray(dB, dtype=float).reshape(system.dim)
    if not dt > 0:
        raise ValueError("dt must be > 0")
    names = state_variables(system.dim)
    bindings = dict(zip(names, state))
    out = np.empty(system.dim)
    for i in range(system.dim):
        try:
            f = ex.evaluate(system.drift[i], t=t, **bindings)
            g = ex.evaluate(system.diffusion[i], t=t, **bindings)
        except ex.DomainError as err:
            raise DivergenceError(f"component {i}: {err}", component=i) from err
        out[i] = state[i] + f * dt + g * dB[i]
        if not np.isfinite(out[i]):
            raise DivergenceError(f"non-finite state in component {i}", component=i)
    return out


def _step_batch(system, states, t, dt, dB, alive):
    f, g = system.coefficients(states, t)
    new = states + f * dt + g * dB
    bad = alive & ~np.isfinite(new).all(axis=1)
    alive &= ~bad
    # diverged paths stay frozen at their last finite state
    new[~alive] = states[~alive]
    return new


def integrate(system, dt, increments, x0=None):
    """Run Euler-Maruyama on given Brownian increments.

    Parameters
    ----------
    system : SdeSystem
    dt : float
    increments : ndarray, shape (P, N, dim)
        ``dB`` for each path and step.
    x0 : array_like, optional
        Initial state; defaults to ``system.initial_state``.

    Returns
    -------
    states : ndarray, shape (P, N + 1, dim)
    diverged : ndarray of bool, shape (P,)
    """
    increments = np.asarray(increments, dtype=float)
    P, N, d = increments.shape
    states = np.empty((P, N + 1, d))
    states[:, 0] = system.initial_state if x0 is None else x0
    alive = np.ones(P, dtype=bool)
    for j in range(1, N + 1):
        t = (j - 1) * dt
        states[:, j] = _step_batch(system, states[:, j - 1], t, dt, increments[:, j - 1], alive)
    return states, ~alive


def iter_states(system, grid, paths=None, block_steps=128):
    """Generate ensemble time slices one step at a time.

    Only ``block_steps`` increments per path are held in memory, so this is
    the streaming path for large ``M * N``.  The output is identical to
    `simulate`.

    Yields
    ------
    j : int
        Step index, 0 .. N.
    states : ndarray, shape (P, dim)
        State of every requested path at ``times[j]``.  Do not mutate.
    alive : ndarray of bool, shape (P,)
        Paths that have not diverged so far.
    """
    paths = np.arange(grid.n_paths) if paths is None else np.asarray(paths)
    d = system.dim
    N = grid.n_steps
    dt = grid.dt
    sqrt_dt = np.sqrt(dt)
    times = grid.times
    bitgens = [
        [SeedSpec(grid.seed, int(m), c).bit_generator() for c in range(d)] for m in paths
    ]
    state = np.empty((len(paths), d))
    state[:] = system.initial_state
    alive = np.ones(len(paths), dtype=bool)
    yield 0, state, alive
    j = 0
    raw = np.empty((len(paths), block_steps, d), dtype=np.uint64)
    while j < N:
        b = min(block_steps, N - j)
        for p, gens in enumerate(bitgens):
            for c, gen in enumerate(gens):
                raw[p, :b, c] = gen.random_raw(b)
        dB = sqrt_dt * raw_to_normal(raw[:, :b])
        for k in range(b):
            state = _step_batch(system, state, times[j], dt, dB[:, k], alive)
            j += 1
            yield j, state, alive


def check_divergence(n_diverged, n_paths):
    if n_diverged > DIVERGENCE_LIMIT * n_paths:
        raise DivergenceError(
            f"{n_diverged} of {n_paths} paths diverged "
            f"(limit {DIVERGENCE_LIMIT:.0%})",
            n_diverged=n_diverged,
            n_paths=n_paths,
        )
    if n_diverged:
        log.warning("%d of %d paths diverged and were frozen", n_diverged, n_paths)


def simulate(system, grid, workers=1, block_steps=128):
    """Simulate ``grid.n_paths`` Euler-Maruyama paths of `system`.

    Path ``m`` draws its noise from substreams ``(seed, m, component)``, so the
    result does not depend on `workers`.

    Raises
    ------
    DivergenceError
        If more than 1% of the paths became non-finite.
    """
    M, N, d = grid.n_paths, grid.n_steps, system.dim
    states = np.empty((M, N + 1, d))
    diverged = np.zeros(M, dtype=bool)

    def run(chunk):
        alive = None
        for j, s, alive in iter_states(system, grid, chunk, block_steps):
            states[chunk[0] : chunk[-1] + 1, j] = s
        diverged[chunk[0] : chunk[-1] + 1] = ~alive

    chunks = [c for c in np.array_split(np.arange(M), max(1, workers)) if len(c)]
    if len(chunks) == 1:
        run(chunks[0])
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            list(pool.map(run, chunks))

    check_divergence(int(diverged.sum()), M)
    return PathEnsemble(grid.times, states, system.label, grid, diverged)


def ensemble_mean_path(ens):
    """Mean over paths at each time slice, shape ``(N + 1, dim)``."""
    if ens.n_paths < 1:
        raise ValueError("empty ensemble")
    # shifted by the first path: exact when all paths coincide
    ref = ens.states[0]
    return ref + (ens.states - ref).mean(axis=0)


def write_paths_csv(ens, path, header_lines=()):
    """Dump every state as ``path,step,t,x[,y]`` rows."""
    names = state_variables(ens.dim)
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("path", "step", "t") + names)
        times = [repr(float(t)) for t in ens.times]
        for m in range(ens.n_paths):
            for j, t in enumerate(times):
                w.writerow([m, j, t] + [repr(float(v)) for v in ens.states[m, j]])
