"""Time grids and discretized two-sided Brownian environments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_NODES = 50_000_000

# spawn-key tags keep environment streams disjoint from other consumers
ENV_STREAM = 0
REFERENCE_STREAM = 1
BOOTSTRAP_STREAM = 2


class GridError(ValueError):
    pass


def _snap_index(x: float, step: float, outward) -> int:
    q = x / step
    r = round(q)
    if abs(q - r) <= 1e-9 * max(1.0, abs(q)):
        return int(r)
    return int(outward(q))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``step * arange(i_left, i_right + 1)``; node ``-i_left`` is time 0."""

    i_left: int
    i_right: int
    step: float
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def t_left(self) -> float:
        return self.i_left * self.step

    @property
    def t_right(self) -> float:
        return self.i_right * self.step

    @property
    def size(self) -> int:
        return self.i_right - self.i_left + 1

    @property
    def zero_index(self) -> int:
        return -self.i_left

    def index_of(self, time: float) -> int:
        """Array index of a grid node; raises GridError if ``time`` is not a node."""
        q = time / self.step
        r = round(q)
        if abs(q - r) > 1e-9 * max(1.0, abs(q)) or not self.i_left <= r <= self.i_right:
            raise GridError(f"time {time} is not a node of {self}")
        return int(r) - self.i_left

    def snap(self, time: float) -> float:
        """Nearest node time (no range check)."""
        return round(time / self.step) * self.step


def make_grid(t_left: float, t_right: float, step: float, max_nodes: int = MAX_NODES) -> TimeGrid:
    """Grid on [t_left, t_right] with spacing ``step``, endpoints snapped outward to multiples of step."""
    for name, v in (("t_left", t_left), ("t_right", t_right), ("step", step)):
        if not math.isfinite(v):
            raise GridError(f"{name} must be finite, got {v}")
    if step <= 0:
        raise GridError(f"step must be > 0, got {step}")
    if not t_left <= 0 < t_right:
        raise GridError(f"need t_left <= 0 < t_right, got ({t_left}, {t_right})")
    i_left = _snap_index(t_left, step, math.floor)
    i_right = _snap_index(t_right, step, math.ceil)
    if i_right - i_left + 1 > max_nodes:
        raise GridError(f"grid would have {i_right - i_left + 1} nodes (max {max_nodes})")
    nodes = step * np.arange(i_left, i_right + 1, dtype=float)
    nodes.flags.writeable = False
    return TimeGrid(i_left=i_left, i_right=i_right, step=float(step), nodes=nodes)


def default_t_left(n: int, theta: float) -> float:
    """Left truncation of the s_0 integral: -max(10, 8 n^{2/3}) / min(theta, 1)."""
    return -max(10.0, 8.0 * n ** (2.0 / 3.0)) / min(theta, 1.0)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Environment:
    """Brownian paths B_0..B_n sampled at the grid nodes, pinned at time 0."""

    grid: TimeGrid
    levels: int
    paths: np.ndarray = field(repr=False)
    increments: np.ndarray = field(repr=False)
    seed: int
    sample_index: int

    def path(self, j: int) -> np.ndarray:
        return self.paths[j]

    def value(self, j: int, time: float) -> float:
        return float(self.paths[j, self.grid.index_of(time)])


def _paths_from_increments(inc: np.ndarray, zero: int) -> np.ndarray:
    paths = np.zeros((inc.shape[0], inc.shape[1] + 1))
    np.cumsum(inc[:, zero:], axis=1, out=paths[:, zero + 1:])
    if zero > 0:
        # B(-k*step) = -(sum of the k increments nearest to 0)
        back = np.cumsum(inc[:, zero - 1::-1], axis=1)
        paths[:, zero - 1::-1] = -back
    return paths


def sample_environment(grid: TimeGrid, n: int, seed: int, sample_index: int) -> Environment:
    """Sample B_0, ..., B_n on ``grid``.

    Each level uses two substreams keyed by (seed, sample_index, level, direction),
    drawing increments outward from time 0, so a wider grid reproduces the same
    path values on the overlap.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    zero = grid.zero_index
    n_fwd = grid.i_right
    n_bwd = zero
    sd = math.sqrt(grid.step)
    inc = np.empty((n + 1, grid.size - 1))
    for j in range(n + 1):
        fwd = substream(seed, ENV_STREAM, sample_index, j, 0).standard_normal(n_fwd)
        inc[j, zero:] = fwd * sd
        if n_bwd:
            bwd = substream(seed, ENV_STREAM, sample_index, j, 1).standard_normal(n_bwd)
            # bwd[k] is the increment over [-(k+1)*step, -k*step]
            inc[j, :zero] = bwd[::-1] * sd
    paths = _paths_from_increments(inc, zero)
    paths.flags.writeable = False
    inc.flags.writeable = False
    return Environment(grid=grid, levels=n, paths=paths, increments=inc, seed=int(seed),
                       sample_index=int(sample_index))


def zero_environment(grid: TimeGrid, n: int) -> Environment:
    """All paths identically zero; used for closed-form checks."""
    paths = np.zeros((n + 1, grid.size))
    return Environment(grid=grid, levels=n, paths=paths, increments=np.zeros((n + 1, grid.size - 1)),
                       seed=0, sample_index=-1)


def environment_from_paths(grid: TimeGrid, paths: np.ndarray) -> Environment:
    paths = np.asarray(paths, dtype=float)
    if paths.ndim != 2 or paths.shape[1] != grid.size:
        raise ValueError(f"paths must have shape (levels, {grid.size})")
    if np.any(paths[:, grid.zero_index] != 0):
        raise ValueError("paths must vanish at time 0")
    return Environment(grid=grid, levels=paths.shape[0] - 1, paths=paths, increments=np.diff(paths, axis=1),
                       seed=0, sample_index=-1)


def coarsen(env: Environment, factor: int) -> Environment:
    """Restrict an environment to every ``factor``-th node (same Brownian paths, coarser grid)."""
    g = env.grid
    if factor < 1 or g.i_left % factor or g.i_right % factor:
        raise GridError(f"grid endpoints ({g.i_left}, {g.i_right}) not divisible by {factor}")
    coarse = make_grid(g.t_left, g.t_right, g.step * factor)
    # nodes of the coarse grid sit at fine indices 0, factor, 2*factor, ...
    paths = np.ascontiguousarray(env.paths[:, ::factor])
    return Environment(grid=coarse, levels=env.levels, paths=paths, increments=np.diff(paths, axis=1),
                       seed=env.seed, sample_index=env.sample_index)
