"""Log-space partition functions of the semi-discrete polymer on a grid.

Each jump time is summed over grid nodes with weight ``step``. Under the default
``"trapezoid"`` rule a jump landing on the same node as the previous one gets
half weight (composite trapezoid rule for every nested integral). The
``"rectangle"`` rule gives every weakly ordered index tuple full weight.
Both rules are symmetric under reversing the chain, so the forward recursions
here and the backward profiles in :mod:`stationary_polymer.gibbs` sum the same
discrete object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Environment, GridError, default_t_left

RULES = ("trapezoid", "rectangle")
_LOG_HALF = math.log(0.5)


def _check_rule(rule: str) -> None:
    if rule not in RULES:
        raise ValueError(f"unknown quadrature rule {rule!r}; expected one of {RULES}")


def log_cumulative_integral(x: np.ndarray, rule: str = "trapezoid", left_endpoint: bool = False) -> np.ndarray:
    """log of sum_{v <= u} w(v, u) exp(x[v]) for every index u (step factor excluded).

    With ``left_endpoint`` the first node is a fixed integration limit, so under
    the trapezoid rule it also gets half weight and u = 0 integrates to zero.
    """
    x = np.asarray(x, dtype=float)
    if rule == "rectangle":
        return np.logaddexp.accumulate(x)
    _check_rule(rule)
    xa = x
    if left_endpoint:
        xa = x.copy()
        xa[0] += _LOG_HALF
    acc = np.logaddexp.accumulate(xa)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.exp(x - acc)
        out = acc + np.log1p(-0.5 * ratio)
    out = np.where(np.isneginf(acc), -np.inf, out)
    if left_endpoint:
        out[0] = -np.inf
    return out


def log_suffix_integral(y: np.ndarray, rule: str = "trapezoid") -> np.ndarray:
    """log of sum_{v >= u} w(u, v) exp(y[v]); mirror image of the prefix version."""
    return log_cumulative_integral(np.asarray(y)[::-1], rule)[::-1]


@dataclass(frozen=True)
class PartitionResult:
    log_z: float
    per_level: np.ndarray
    n: int
    t: float
    theta: float | None = None
    rule: str = "trapezoid"
    warnings: tuple[str, ...] = field(default=())

    @property
    def stationary(self) -> bool:
        return self.theta is not None


@dataclass(frozen=True)
class BurkeRecord:
    """r_j = log Z_{j,t} - log Z_{j-1,t} for j = 1..n."""

    increments: np.ndarray
    boundary: float  # -B_0(t) + theta t

    @property
    def total(self) -> float:
        return float(np.sum(self.increments))


def _horizon(env: Environment, t: float) -> int:
    if not t > 0:
        raise GridError(f"t must be > 0, got {t}")
    return env.grid.index_of(t)


def log_point_to_point(env: Environment, n: int, t: float, rule: str = "trapezoid") -> PartitionResult:
    """log Z_{n,t}: paths from (0, level 1) to (t, level n) using B_1..B_n."""
    _check_rule(rule)
    if n < 1:
        raise ValueError(f"point-to-point needs n >= 1, got {n}")
    if env.levels < n:
        raise ValueError(f"environment has levels 0..{env.levels}, need B_1..B_{n}")
    g = env.grid
    it = _horizon(env, t)
    z = g.zero_index
    if it <= z:
        raise GridError("t must lie to the right of 0")
    log_dt = math.log(g.step)
    paths = env.paths[:, z:it + 1]
    cur = paths[1] - paths[1, 0]
    per_level = [float(cur[-1])]
    for j in range(2, n + 1):
        b = paths[j]
        cur = b + log_dt + log_cumulative_integral(cur - b, rule, left_endpoint=True)
        per_level.append(float(cur[-1]))
    return PartitionResult(log_z=per_level[-1], per_level=np.array(per_level), n=n, t=float(t), rule=rule)


def stationary_levels(env: Environment, theta: float, n: int, t: float, rule: str = "trapezoid") -> np.ndarray:
    """Array of shape (n + 1, nodes up to t) holding log Z^theta_{j}(u) for every level and node."""
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if n < 0 or env.levels < n:
        raise ValueError(f"need 0 <= n <= {env.levels}, got {n}")
    _check_rule(rule)
    g = env.grid
    it = _horizon(env, t)
    s = g.nodes[:it + 1]
    paths = env.paths[:, :it + 1]
    log_dt = math.log(g.step)
    out = np.empty((n + 1, it + 1))
    out[0] = theta * s - paths[0]
    for j in range(1, n + 1):
        b = paths[j]
        out[j] = b + log_dt + log_cumulative_integral(out[j - 1] - b, rule)
    return out


def log_stationary(env: Environment, theta: float, n: int, t: float, rule: str = "trapezoid") -> PartitionResult:
    """log Z^theta_{n,t} with boundary energy theta*s_0 - B_0(s_0) and free s_0 >= t_left."""
    levels = stationary_levels(env, theta, n, t, rule)
    warnings = []
    if env.grid.t_left > default_t_left(n, theta) + 0.5 * env.grid.step:
        warnings.append(
            f"t_left={env.grid.t_left:g} is shorter than the truncation policy {default_t_left(n, theta):g}"
        )
    per_level = levels[:, -1].copy()
    return PartitionResult(log_z=float(per_level[-1]), per_level=per_level, n=n, t=float(t), theta=float(theta),
                           rule=rule, warnings=tuple(warnings))


def burke_increments(result: PartitionResult) -> BurkeRecord:
    if not result.stationary:
        raise TypeError("Burke increments need a stationary partition result")
    if result.n < 1:
        raise ValueError("Burke increments need n >= 1")
    return BurkeRecord(increments=np.diff(result.per_level), boundary=float(result.per_level[0]))
