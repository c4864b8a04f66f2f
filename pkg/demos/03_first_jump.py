"""Quenched law of the first jump s_0 for one environment.

The backward profiles give the density of s_0 directly; log Z^theta is the
cumulant generating function of s_0 in theta, which the finite differences
below confirm.

Run: python3 demos/03_first_jump.py
"""
import numpy as np

from stationary_polymer.gibbs import (backward_profiles, convexity_chain, quenched_cumulants, quenched_moment,
                                      theta_derivative_check)
from stationary_polymer.grid import default_t_left, make_grid, sample_environment
from stationary_polymer.partition import log_stationary

theta, n = 1.0, 8
t = round(8 * 1.6449340668 / 0.01) * 0.01
g = make_grid(default_t_left(n, theta), t, 0.01)
env = sample_environment(g, n, seed=3, sample_index=0)
prof = backward_profiles(env, theta, n, t)
print("forward log Z", log_stationary(env, theta, n, t).log_z, " backward", prof.log_z)

p = prof.probabilities
mode = prof.nodes[np.argmax(p)]
print(f"s_0 mode {mode:.2f}, mean {quenched_moment(prof):.4f}, P(s_0 > 0) = "
      f"{quenched_moment(prof, 'tail_indicator', u=0.0):.4f}")
print("E[s_0^+] =", quenched_moment(prof, "plus"), " E[s_0^-] =", quenched_moment(prof, "minus"))
print("cumulants of s_0      :", np.round(quenched_cumulants(prof, "identity", 4), 4))
print("cumulants of s_0^+    :", np.round(quenched_cumulants(prof, "plus", 4), 4))
print("cumulants of s_0^+^t/2:", np.round(quenched_cumulants(prof, "plus_min_tau", 4, tau=round(t / 2, 2)), 4))

h = 1e-3
z = prof.log_z_at(np.array([theta - h, theta, theta + h]))
print("d/dtheta log Z     ", (z[2] - z[0]) / (2 * h))
print("d2/dtheta2 log Z   ", (z[2] - 2 * z[1] + z[0]) / h ** 2)

for hh in (0.1, 0.05):
    print(f"central-difference residual at h={hh}: {theta_derivative_check(env, theta, hh, n, t):.3e}")
print("secant / mean / secant (increasing by convexity):", np.round(convexity_chain(prof, 0.9, 1.1), 5))
