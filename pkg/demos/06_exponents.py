"""Growth of Var(log Z) and of the first-jump scale along the characteristic direction.

The default run is a reduced version of the acceptance suite (n up to 64,
N=200) and takes about a minute; the slopes approach 2/3 slowly.

Run: python3 demos/06_exponents.py
"""
from stationary_polymer.ensemble import RunConfig, exponent_quantities, fit_exponents, run_ensemble

n_list = (8, 16, 32, 64)
runs = []
for n in n_list:
    s = run_ensemble(RunConfig(theta=1.0, n=n, dt=0.02, samples=200, seed=17, bootstrap=200))
    q = exponent_quantities(s)
    print(f"n={n:4d} t={s.t:7.2f}  Var(log Z)={q['var_log_z'][0]:7.3f}+/-{q['var_log_z'][1]:.3f}"
          f"  E|s_0|={q['annealed_abs_s0'][0]:7.3f}+/-{q['annealed_abs_s0'][1]:.3f}")
    runs.append(s)

for name, fit in fit_exponents(runs).items():
    target = "" if fit.target is None else f" (limit {fit.target:.3f})"
    print(f"{name:22s} slope {fit.slope:.3f} +/- {fit.slope_se:.3f}{target}")
