"""Monte Carlo checks of the exact identities on one ensemble.

The default ensemble (N=2000, the size the variance tolerance is stated for) takes
about half a minute; pass
a sample count as the first argument to change it.

Run: python3 demos/05_identity_checks.py [samples]
"""
import sys

from stationary_polymer.ensemble import RunConfig, run_all_checks, run_ensemble

samples = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
cfg = RunConfig(theta=1.0, n=8, dt=0.01, samples=samples, seed=7, theta_list=(1.0, 1.2), ladder_samples=100)
print(f"simulating {samples} environments at theta={cfg.theta}, n={cfg.n}, t={cfg.horizon():.2f} ...")
summary = run_ensemble(cfg)
print("k-statistics of log Z:", [round(v, 4) for v in summary.cumulants["k"]])
print("step-size ladder:", {k: summary.ladder[k] for k in ("mean_diff", "se_diff", "allowance")})
for chk in run_all_checks(summary).values():
    print(chk.line())

burke = summary.checks["burke"].detail
print(f"Burke: variance {burke['variance']:.4f} (target {burke['variance_target']:.4f}),"
      f" adjacent correlation {burke['adjacent_correlation']:.4f}, KS p {burke['ks_pvalue']:.3f}")
print("k=4 closed form vs generic assembly gap:", summary.checks["cumulant_k4"].detail["closed_form_gap"])
