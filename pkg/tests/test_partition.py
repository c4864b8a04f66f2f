import itertools
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from stationary_polymer.grid import (GridError, default_t_left, environment_from_paths, make_grid,
                                     sample_environment, zero_environment)
from stationary_polymer.partition import (burke_increments, log_cumulative_integral, log_point_to_point,
                                          log_stationary, log_suffix_integral)


def _random_env(n, t_left, t, step, seed=0, index=0):
    return sample_environment(make_grid(t_left, t, step), n, seed, index)


# --- brute-force oracles: explicit sums over all ordered jump-index tuples ---

def _brute_stationary(env, theta, n, t, rule):
    g = env.grid
    it = g.index_of(t)
    s = g.nodes[:it + 1]
    b = env.paths[:, :it + 1]
    total = 0.0
    for idx in itertools.combinations_with_replacement(range(it + 1), n):
        chain = idx + (it,)
        w = 1.0
        for j in range(1, n + 1):
            if rule == "trapezoid" and chain[j - 1] == chain[j]:
                w *= 0.5
        energy = theta * s[chain[0]] - b[0, chain[0]]
        energy += sum(b[j, chain[j]] - b[j, chain[j - 1]] for j in range(1, n + 1))
        total += w * math.exp(energy)
    return math.log(total) + n * math.log(g.step)


def _brute_point_to_point(env, n, t):
    # composite trapezoid rule for every nested integral over [0, s_j]
    g = env.grid
    z = g.zero_index
    it = g.index_of(t)
    b = env.paths
    total = 0.0
    for idx in itertools.combinations_with_replacement(range(z, it + 1), n - 1):
        chain = (z,) + idx + (it,)
        w = 1.0
        for j in range(1, n):
            lo, v, hi = z, chain[j], chain[j + 1]
            if hi == lo:
                w = 0.0
            elif v in (lo, hi):
                w *= 0.5
        energy = sum(b[j, chain[j]] - b[j, chain[j - 1]] for j in range(1, n + 1))
        total += w * math.exp(energy)
    return math.log(total) + (n - 1) * math.log(g.step)


@pytest.mark.parametrize("rule", ["trapezoid", "rectangle"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_stationary_matches_brute_force(rule, n):
    env = _random_env(n, -0.6, 0.5, 0.1, seed=3)
    fast = log_stationary(env, 1.3, n, 0.5, rule).log_z
    assert fast == pytest.approx(_brute_stationary(env, 1.3, n, 0.5, rule), abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_point_to_point_matches_brute_force(n):
    env = _random_env(n, -0.2, 0.8, 0.1, seed=5)
    fast = log_point_to_point(env, n, 0.8).log_z
    assert fast == pytest.approx(_brute_point_to_point(env, n, 0.8), abs=1e-12)


def test_single_level_against_scipy_trapezoid():
    env = _random_env(1, -30.0, 3.0, 0.01, seed=8)
    g = env.grid
    it = g.index_of(3.0)
    s = g.nodes[:it + 1]
    integrand = np.exp(1.0 * s - env.paths[0, :it + 1] - env.paths[1, :it + 1])
    expected = env.value(1, 3.0) + math.log(trapezoid(integrand, s))
    # the grid rule has no half weight at t_left; that node carries ~e^{-30}
    assert log_stationary(env, 1.0, 1, 3.0).log_z == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("n", [1, 4, 8])
def test_zero_environment_stationary_closed_form(n):
    theta, t = 1.0, 8.0
    errs = []
    for step in (0.01, 0.005):
        g = make_grid(default_t_left(n, theta), t, step)
        res = log_stationary(zero_environment(g, n), theta, n, t)
        errs.append(abs(res.log_z - (theta * t - n * math.log(theta))))
    assert errs[0] < 0.02
    # second-order rule: the error falls by about four when the step halves
    assert errs[1] < errs[0] / 2


@pytest.mark.parametrize("n", [2, 3])
def test_zero_environment_point_to_point_low_order_is_exact(n):
    # polynomial integrands of degree <= 1 are integrated exactly by the trapezoid rule
    env = zero_environment(make_grid(-1.0, 2.0, 0.01), n)
    assert log_point_to_point(env, n, 2.0).log_z == pytest.approx((n - 1) * math.log(2.0) - math.lgamma(n), abs=1e-12)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_zero_environment_point_to_point_closed_form(n):
    t = 2.0
    target = (n - 1) * math.log(t) - math.lgamma(n)
    errs = [abs(log_point_to_point(zero_environment(make_grid(-1.0, t, h), n), n, t).log_z - target)
            for h in (0.01, 0.005)]
    assert errs[0] < 1e-3
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_rectangle_rule_is_first_order():
    n, t = 4, 2.0
    target = (n - 1) * math.log(t) - math.lgamma(n)
    errs = [abs(log_point_to_point(zero_environment(make_grid(-1.0, t, h), n), n, t, "rectangle").log_z - target)
            for h in (0.01, 0.005)]
    assert 1.8 < errs[0] / errs[1] < 2.2


def test_level_zero_and_burke_telescoping():
    env = _random_env(5, -20.0, 4.0, 0.01, seed=1)
    res = log_stationary(env, 0.8, 5, 4.0)
    assert res.per_level[0] == pytest.approx(0.8 * 4.0 - env.value(0, 4.0), abs=1e-12)
    rec = burke_increments(res)
    assert rec.increments.shape == (5,)
    assert rec.boundary + rec.total == pytest.approx(res.log_z, abs=1e-10)
    z0 = log_stationary(env, 0.8, 0, 4.0)
    assert z0.log_z == pytest.approx(0.8 * 4.0 - env.value(0, 4.0), abs=1e-12)


def test_burke_increments_rejects_point_to_point():
    env = _random_env(2, -1.0, 1.0, 0.1)
    with pytest.raises(TypeError):
        burke_increments(log_point_to_point(env, 2, 1.0))
    with pytest.raises(ValueError):
        burke_increments(log_stationary(env, 1.0, 0, 1.0))


def test_short_horizon_warns():
    env = _random_env(8, -5.0, 8.0, 0.01)
    assert log_stationary(env, 1.0, 8, 8.0).warnings


def test_input_validation():
    env = _random_env(2, -1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        log_stationary(env, 0.0, 2, 1.0)
    with pytest.raises(ValueError):
        log_stationary(env, 1.0, 3, 1.0)
    with pytest.raises(ValueError):
        log_stationary(env, 1.0, 2, 1.0, rule="simpson")
    with pytest.raises(GridError):
        log_stationary(env, 1.0, 2, 0.55)
    with pytest.raises(GridError):
        log_stationary(env, 1.0, 2, -0.5)
    with pytest.raises(ValueError):
        log_point_to_point(env, 0, 1.0)


def test_log_integrals_handle_large_values():
    x = np.array([800.0, 801.0, 799.0])
    out = log_cumulative_integral(x)
    ref = np.log(np.array([0.5, 1 + 0.5 * math.e, 1 + math.e + 0.5 * math.exp(-1)])) + 800
    np.testing.assert_allclose(out, ref, rtol=1e-14)
    np.testing.assert_allclose(log_suffix_integral(x), log_cumulative_integral(x[::-1])[::-1])
    assert np.isneginf(log_cumulative_integral(np.zeros(3), left_endpoint=True)[0])


def test_explicit_paths_environment():
    g = make_grid(-0.2, 0.2, 0.1)
    paths = np.array([[0.1, -0.1, 0.0, 0.2, 0.3], [0.0, 0.05, 0.0, -0.1, 0.4]])
    env = environment_from_paths(g, paths)
    assert log_stationary(env, 1.0, 1, 0.2).log_z == pytest.approx(_brute_stationary(env, 1.0, 1, 0.2, "trapezoid"))
