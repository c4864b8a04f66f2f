import math

import numpy as np
import pytest

from stationary_polymer.grid import (GridError, coarsen, default_t_left, environment_from_paths, make_grid,
                                     sample_environment, substream, zero_environment)
from stationary_polymer.partition import log_stationary


def test_make_grid_snaps_outward():
    g = make_grid(-0.3, 1.0, 0.25)
    assert g.t_left == -0.5
    assert g.t_right == 1.0
    assert g.size == 7
    assert g.nodes[g.zero_index] == 0.0


def test_make_grid_exact_multiples_are_kept():
    g = make_grid(-1.0, 0.3, 0.1)
    assert g.i_left == -10 and g.i_right == 3


@pytest.mark.parametrize("args", [(0.5, 1.0, 0.1), (-1.0, 0.0, 0.1), (-1.0, 1.0, 0.0), (-1.0, 1.0, -0.1),
                                  (-math.inf, 1.0, 0.1), (-1.0, 1.0, math.nan)])
def test_make_grid_rejects_bad_input(args):
    with pytest.raises(GridError):
        make_grid(*args)


def test_make_grid_node_budget():
    with pytest.raises(GridError):
        make_grid(-10.0, 10.0, 1e-3, max_nodes=1000)


def test_index_of():
    g = make_grid(-1.0, 2.0, 0.01)
    assert g.nodes[g.index_of(1.37)] == pytest.approx(1.37)
    with pytest.raises(GridError):
        g.index_of(1.375)
    with pytest.raises(GridError):
        g.index_of(3.0)


def test_default_t_left():
    assert default_t_left(1, 1.0) == -10.0
    assert default_t_left(8, 1.0) == pytest.approx(-32.0)
    assert default_t_left(8, 0.5) == pytest.approx(-64.0)


def test_substreams_are_reproducible_and_distinct():
    a = substream(7, 0, 1, 2, 0).standard_normal(5)
    b = substream(7, 0, 1, 2, 0).standard_normal(5)
    c = substream(7, 0, 1, 2, 1).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_environment_is_deterministic_and_pinned():
    g = make_grid(-3.0, 2.0, 0.01)
    e1 = sample_environment(g, 3, seed=9, sample_index=4)
    e2 = sample_environment(g, 3, seed=9, sample_index=4)
    np.testing.assert_array_equal(e1.paths, e2.paths)
    assert np.all(e1.paths[:, g.zero_index] == 0.0)
    np.testing.assert_allclose(np.diff(e1.paths, axis=1), e1.increments)
    e3 = sample_environment(g, 3, seed=9, sample_index=5)
    assert not np.allclose(e1.paths, e3.paths)


def test_increment_variance():
    g = make_grid(-20.0, 20.0, 0.01)
    env = sample_environment(g, 4, seed=1, sample_index=0)
    inc = env.increments.ravel()
    m = inc.size
    var = inc.var()
    # variance of the sample variance of m Gaussians is 2 sigma^4 / m
    assert abs(var - g.step) <= 4 * g.step * math.sqrt(2.0 / m)
    assert abs(inc.mean()) <= 4 * math.sqrt(g.step / m)


def test_brownian_variance_at_fixed_time():
    g = make_grid(-1.0, 2.0, 0.05)
    vals = np.array([sample_environment(g, 0, seed=3, sample_index=i).value(0, 2.0) for i in range(4000)])
    assert vals.var() == pytest.approx(2.0, abs=4 * 2.0 * math.sqrt(2 / 4000))


def test_horizon_doubling_reproduces_paths():
    narrow = make_grid(-20.0, 6.0, 0.01)
    wide = make_grid(-40.0, 6.0, 0.01)
    for i in range(3):
        en = sample_environment(narrow, 4, seed=2, sample_index=i)
        ew = sample_environment(wide, 4, seed=2, sample_index=i)
        off = wide.zero_index - narrow.zero_index
        np.testing.assert_array_equal(ew.paths[:, off:], en.paths)


def _doubling_shifts(n, t_left, t, samples):
    g1 = make_grid(t_left, t, 0.01)
    g2 = make_grid(2 * t_left, t, 0.01)
    return np.array([log_stationary(sample_environment(g2, n, 2, i), 1.0, n, t).log_z
                     - log_stationary(sample_environment(g1, n, 2, i), 1.0, n, t).log_z for i in range(samples)])


def test_horizon_doubling_at_policy_is_small_on_average():
    # rare environments still carry mass beyond the policy horizon, so only the mean is tight
    d = _doubling_shifts(4, default_t_left(4, 1.0), 6.58, 100)
    assert np.all(d >= -1e-12)
    assert np.median(d) < 1e-4
    assert d.mean() < 0.01


def test_horizon_doubling_beyond_policy_is_negligible():
    d = _doubling_shifts(4, 2 * default_t_left(4, 1.0), 6.58, 100)
    assert np.all(np.abs(d) < 1e-5)
    assert np.median(np.abs(d)) < 1e-10


def test_zero_environment_and_from_paths():
    g = make_grid(-1.0, 1.0, 0.5)
    z = zero_environment(g, 2)
    assert z.paths.shape == (3, 5) and not z.paths.any()
    env = environment_from_paths(g, np.array([[1.0, 0.5, 0.0, 0.2, 0.1]]))
    assert env.levels == 0
    with pytest.raises(ValueError):
        environment_from_paths(g, np.ones((1, 5)))
    with pytest.raises(ValueError):
        environment_from_paths(g, np.zeros((1, 4)))


def test_coarsen_keeps_path_values():
    fine = make_grid(-2.0, 2.0, 0.005)
    env = sample_environment(fine, 2, seed=4, sample_index=0)
    c = coarsen(env, 2)
    assert c.grid.step == pytest.approx(0.01)
    for time in (-1.5, 0.0, 0.73, 2.0):
        assert c.value(1, time) == env.value(1, time)
    with pytest.raises(GridError):
        coarsen(sample_environment(make_grid(-0.03, 0.05, 0.01), 0, 1, 0), 2)
