"""Quenched statistics of the first jump s_0 under the stationary polymer measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.special import logsumexp

from .grid import Environment, GridError
from .partition import _check_rule, log_suffix_integral

DEFAULT_KMAX = 6
TRANSFORMS = ("identity", "plus", "minus", "plus_min_tau", "tail_indicator")


@dataclass(frozen=True)
class GibbsProfile:
    """Backward partition profiles and the normalised s_0 marginal.

    ``backward[j - 1]`` holds log G_j(u) on the nodes u <= t; ``log_marginal`` is
    theta*s - B_0(s) + log G_1(s).
    """

    theta: float
    n: int
    t: float
    step: float
    nodes: np.ndarray = field(repr=False)
    b0: np.ndarray = field(repr=False)
    log_marginal: np.ndarray = field(repr=False)
    log_z: float
    backward: np.ndarray = field(repr=False)

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_marginal + math.log(self.step) - self.log_z)

    def log_z_at(self, theta) -> float | np.ndarray:
        """log Z^{theta'} on the same environment and grid, reusing G_1."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if np.any(th <= 0):
            raise ValueError("theta must be > 0")
        base = self.log_marginal - self.theta * self.nodes
        out = logsumexp(base[None, :] + th[:, None] * self.nodes[None, :], axis=1) + math.log(self.step)
        return float(out[0]) if np.ndim(theta) == 0 else out


def backward_profiles(env: Environment, theta: float, n: int, t: float, rule: str = "trapezoid") -> GibbsProfile:
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if n < 1:
        raise ValueError("the s_0 marginal needs n >= 1")
    if env.levels < n:
        raise ValueError(f"environment has levels 0..{env.levels}, need {n}")
    _check_rule(rule)
    g = env.grid
    if not t > 0:
        raise GridError(f"t must be > 0, got {t}")
    it = g.index_of(t)
    s = g.nodes[:it + 1]
    paths = env.paths[:, :it + 1]
    log_dt = math.log(g.step)

    back = np.empty((n, it + 1))
    last = paths[n, -1] - paths[n]
    if rule == "trapezoid":
        last = last.copy()
        last[-1] += math.log(0.5)
    back[n - 1] = last
    for j in range(n - 1, 0, -1):
        b = paths[j]
        back[j - 1] = -b + log_dt + log_suffix_integral(b + back[j], rule)
    lw = theta * s - paths[0] + back[0]
    log_z = float(logsumexp(lw) + log_dt)
    return GibbsProfile(theta=float(theta), n=n, t=float(t), step=g.step, nodes=s, b0=paths[0].copy(),
                        log_marginal=lw, log_z=log_z, backward=back)


def _transform(profile: GibbsProfile, transform: str, tau: float | None, u: float | None) -> np.ndarray:
    s = profile.nodes
    if transform == "identity":
        return s
    if transform == "plus":
        return np.maximum(s, 0.0)
    if transform == "minus":
        return np.maximum(-s, 0.0)
    if transform == "plus_min_tau":
        if tau is None or not 0 < tau <= profile.t:
            raise ValueError(f"plus_min_tau needs 0 < tau <= t, got {tau}")
        return np.minimum(np.maximum(s, 0.0), tau)
    if transform == "tail_indicator":
        if u is None:
            raise ValueError("tail_indicator needs u")
        return (s > u).astype(float)
    raise ValueError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")


def quenched_moment(profile: GibbsProfile, transform: str = "identity", k: int = 1, *,
                    tau: float | None = None, u: float | None = None) -> float:
    """E^theta[f(s_0)^k]; ``tail_indicator`` returns P^theta(s_0 > u) for any k >= 1."""
    f = _transform(profile, transform, tau, u)
    p = profile.probabilities
    if k == 0:
        return float(p.sum())
    return float(np.dot(p, f ** k))


def moments_to_cumulants(moments) -> np.ndarray:
    """Raw moments m_1..m_k to cumulants kappa_1..kappa_k."""
    m = [1.0] + [float(v) for v in moments]
    k_max = len(m) - 1
    if k_max < 1:
        raise ValueError("need at least one moment")
    kappa = [0.0] * (k_max + 1)
    for k in range(1, k_max + 1):
        kappa[k] = m[k] - sum(comb(k - 1, j - 1) * kappa[j] * m[k - j] for j in range(1, k))
    return np.array(kappa[1:])


def _cumulants_of(values: np.ndarray, p: np.ndarray, kmax: int) -> np.ndarray:
    mean = float(np.dot(p, values))
    d = values - mean
    central = [0.0]
    dk = d.copy()
    for _ in range(2, kmax + 1):
        dk = dk * d
        central.append(float(np.dot(p, dk)))
    out = moments_to_cumulants(central[:kmax]) if kmax > 1 else np.zeros(1)
    out[0] = mean
    return out


def quenched_cumulants(profile: GibbsProfile, variant: str = "plus", kmax: int = DEFAULT_KMAX, *,
                       tau: float | None = None) -> np.ndarray:
    """kappa^theta_1..kappa^theta_kmax of identity, s_0^+ or s_0^+ wedge tau.

    Computed from central moments, which avoids cancellation when E^theta[f] is large.
    """
    if variant not in ("identity", "plus", "plus_min_tau"):
        raise ValueError(f"unknown cumulant variant {variant!r}")
    f = _transform(profile, variant, tau, None)
    return _cumulants_of(f, profile.probabilities, kmax)


@dataclass
class QuenchedRecord:
    """Scalar outputs of one environment."""

    sample_index: int
    log_z: float
    burke: np.ndarray
    mean_s0: float
    mean_plus: float
    mean_minus: float
    mean_abs: float
    abs_moments: np.ndarray          # E^theta[|s_0|^p], p = 1..kmax
    moments: np.ndarray              # E^theta[s_0^k], k = 1..kmax
    plus_moments: np.ndarray
    minus_moments: np.ndarray
    trunc_moments: np.ndarray
    cumulants_s0: np.ndarray         # kappa^theta_k(s_0)
    cumulants_plus: np.ndarray       # kappa^theta_k(s_0^+)
    cumulants_trunc: np.ndarray      # kappa^theta_k(s_0^+ wedge tau)
    var_s0: float
    var_plus: float
    var_minus: float
    b0_t: float
    b0_tau: float
    hermite_t: np.ndarray            # H_{b,t}(B_0(t)), b = 0..kmax
    hermite_tau: np.ndarray          # H_{b,tau}(B_0(tau)), b = 0..kmax
    extra_log_z: np.ndarray = field(default_factory=lambda: np.zeros(0))
    # |forward - backward| log Z, a per-sample consistency diagnostic
    fb_gap: float = 0.0


def quenched_record(profile: GibbsProfile, *, tau: float, kmax: int = DEFAULT_KMAX, sample_index: int = 0,
                    burke: np.ndarray | None = None, log_z: float | None = None,
                    extra_thetas=()) -> QuenchedRecord:
    from .special import hermite_table

    p = profile.probabilities
    s = profile.nodes
    plus = np.maximum(s, 0.0)
    minus = np.maximum(-s, 0.0)
    trunc = np.minimum(plus, tau)
    powers = np.arange(1, kmax + 1)[:, None]

    def raw(f):
        return (f[None, :] ** powers) @ p

    cum_s0 = _cumulants_of(s, p, kmax)
    cum_plus = _cumulants_of(plus, p, kmax)
    cum_trunc = _cumulants_of(trunc, p, kmax)
    var_minus = float(_cumulants_of(minus, p, 2)[1])
    it = int(round(profile.t / profile.step)) - int(round(profile.nodes[0] / profile.step))
    i_tau = int(round(tau / profile.step)) - int(round(profile.nodes[0] / profile.step))
    b0_t = float(profile.b0[it])
    b0_tau = float(profile.b0[i_tau])
    extra = profile.log_z_at(np.asarray(extra_thetas, dtype=float)) if len(extra_thetas) else np.zeros(0)
    return QuenchedRecord(
        sample_index=sample_index,
        log_z=profile.log_z if log_z is None else float(log_z),
        burke=np.zeros(0) if burke is None else np.asarray(burke),
        mean_s0=float(cum_s0[0]),
        mean_plus=float(cum_plus[0]),
        mean_minus=float(np.dot(p, minus)),
        mean_abs=float(np.dot(p, np.abs(s))),
        abs_moments=raw(np.abs(s)),
        moments=raw(s),
        plus_moments=raw(plus),
        minus_moments=raw(minus),
        trunc_moments=raw(trunc),
        cumulants_s0=cum_s0,
        cumulants_plus=cum_plus,
        cumulants_trunc=cum_trunc,
        var_s0=float(cum_s0[1]) if kmax >= 2 else float("nan"),
        var_plus=float(cum_plus[1]) if kmax >= 2 else float("nan"),
        var_minus=var_minus,
        b0_t=b0_t,
        b0_tau=b0_tau,
        hermite_t=hermite_table(kmax, profile.t, b0_t),
        hermite_tau=hermite_table(kmax, tau, b0_tau),
        extra_log_z=np.atleast_1d(extra),
    )


def theta_derivative_check(env: Environment, theta: float, h: float, n: int, t: float,
                           rule: str = "trapezoid") -> float:
    """|central difference of log Z^theta in theta - E^theta[s_0]| on one environment."""
    if not 0 < h < theta / 4:
        raise ValueError(f"need 0 < h < theta/4, got h={h}")
    if n < 1:
        raise ValueError("derivative check needs n >= 1 (s_0 is absent for n = 0)")
    prof = backward_profiles(env, theta, n, t, rule)
    lo, hi = prof.log_z_at(np.array([theta - h, theta + h]))
    return abs((hi - lo) / (2 * h) - quenched_moment(prof, "identity", 1))


def convexity_chain(profile: GibbsProfile, eta: float, lam: float) -> tuple[float, float, float]:
    """(secant left of theta, E^theta[s_0], secant right of theta); convexity orders them."""
    th = profile.theta
    if not eta < th < lam:
        raise ValueError("need eta < theta < lambda")
    z_eta, z_lam = profile.log_z_at(np.array([eta, lam]))
    return ((profile.log_z - z_eta) / (th - eta), quenched_moment(profile, "identity", 1),
            (z_lam - profile.log_z) / (lam - th))
