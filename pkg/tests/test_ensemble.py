import math
import warnings

import numpy as np
import pytest

from stationary_polymer import ensemble as en
from stationary_polymer.special import polygamma

SMALL = dict(theta=1.0, n=3, dt=0.02, samples=64, seed=5, bootstrap=50)


@pytest.fixture(scope="module")
def small():
    s = en.run_ensemble(en.RunConfig(**SMALL, theta_list=(1.0, 1.2), ladder_samples=8))
    en.run_all_checks(s)
    return s


def test_config_validation_and_horizon():
    cfg = en.RunConfig(n=8, dt=0.01)
    assert cfg.horizon() == pytest.approx(round(8 * polygamma(1, 1.0) / 0.01) * 0.01)
    assert cfg.left() == pytest.approx(-32.0)
    assert en.RunConfig(n=8, theta_list=(0.5,)).left() == pytest.approx(-64.0)
    assert en.RunConfig(t=3.0).horizon() == pytest.approx(3.0)
    with pytest.raises(ValueError):
        en.RunConfig(n=8, t_offset=20.0).horizon()
    for bad in (dict(theta=0), dict(n=-1), dict(samples=0), dict(dt=0), dict(kmax=1), dict(threads=0),
                dict(theta_list=(1.0, -2.0))):
        with pytest.raises(ValueError):
            en.RunConfig(**bad)


def test_fingerprint_ignores_threads():
    a = en.RunConfig(threads=1)
    b = en.RunConfig(threads=8)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != en.RunConfig(seed=8).config_hash()


def test_records_are_ordered_and_thread_independent():
    one = en.run_ensemble(en.RunConfig(**SMALL, threads=1, chunk=7))
    many = en.run_ensemble(en.RunConfig(**SMALL, threads=8, chunk=7))
    np.testing.assert_array_equal(one.columns["sample_index"], np.arange(SMALL["samples"]))
    for key in one.columns:
        np.testing.assert_array_equal(one.columns[key], many.columns[key])
    assert one.to_dict() == many.to_dict()


def test_record_columns(small):
    c = small.columns
    assert c["burke"].shape == (64, 3)
    assert c["cumulants_plus"].shape == (64, 6)
    assert c["extra_log_z"].shape == (64, 6)
    assert np.all(c["fb_gap"] < 1e-8)
    np.testing.assert_allclose(c["extra_log_z"][:, 0], c["log_z"], atol=1e-8)


def test_all_checks_recorded(small):
    names = set(small.checks)
    for expected in ("mean", "burke", "variance", "ibp_t_11", "ibp_tau_21", "cumulant_k4", "psis_k2",
                     "gibbs_bounds", "convexity", "comparison_1", "comparison_1.2"):
        assert expected in names
    assert small.checks["comparison_1"].passed
    d = small.to_dict()
    assert set(d["checks"]) == names
    assert d["ladder"]["samples"] == 8


def test_k2_cumulant_check_equals_variance_check(small):
    assert small.checks["cumulant_k2"].residual == small.checks["variance"].residual


def test_bootstrap_is_deterministic(small):
    lz = small.columns["log_z"]
    a = small.bootstrap(lambda i: lz[i].mean(), tag=3)
    b = small.bootstrap(lambda i: lz[i].mean(), tag=3)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (50,)


def test_check_interval():
    c = en.Check("x", 1.0, 0.5, 0.5, se=0.1, allowance=0.2)
    assert c.ci == pytest.approx((0.5 - 0.6, 0.5 + 0.6))
    assert "FAIL" in c.line()
    assert c.to_dict()["ci"] == pytest.approx([-0.1, 1.1])


def test_n_zero_is_exact_and_skips_s0_suites():
    s = en.run_ensemble(en.RunConfig(theta=1.0, n=0, t=2.0, dt=0.02, samples=400, seed=1, bootstrap=100))
    # log Z = theta t - B_0(t), so the mean identity holds with Var = t
    assert np.var(s.columns["log_z"], ddof=1) == pytest.approx(2.0, rel=0.25)
    assert en.verify_mean(s).passed
    assert en.verify_burke(s).skipped
    assert en.verify_variance_identity(s).skipped
    assert en.verify_cumulant_formula(s, 3).skipped
    assert en.verify_ibp(s)["ibp"].skipped


def test_single_sample_is_degenerate():
    s = en.run_ensemble(en.RunConfig(n=2, t=1.0, dt=0.05, samples=1, bootstrap=10))
    assert s.degenerate
    chk = en.verify_mean(s)
    assert not chk.passed and "degenerate" in chk.reason


def test_delta_ladder_reports_allowance():
    lad = en.delta_ladder(en.RunConfig(n=2, t=2.0, dt=0.02, samples=1), 6)
    assert lad["dt"] == [0.02, 0.01]
    assert lad["allowance"] >= 2 * abs(lad["mean_diff"])


def test_weighted_slope_recovers_power_law():
    ns = [8, 16, 32, 64]
    fit = en._weighted_slope("x", ns, [3 * n ** 0.7 for n in ns], [0.01] * 4)
    assert fit.slope == pytest.approx(0.7)
    assert fit.r2 == pytest.approx(1.0)


def test_fit_exponents_warns_on_non_geometric_list():
    runs = [en.run_ensemble(en.RunConfig(n=n, dt=0.05, samples=16, bootstrap=10)) for n in (2, 3, 5, 6)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fits = en.fit_exponents(runs)
    assert any("geometric" in str(w.message) for w in caught)
    assert set(fits) >= {"var_log_z", "annealed_abs_s0", "central_abs_4", "annealed_abs_s0_pow2"}
    with pytest.raises(ValueError):
        en.fit_exponents(runs[:3])
    assert all(math.isfinite(f.slope) for f in fits.values())
