"""Polygamma values, generalized Hermite polynomials and the Burke increment law.

Run: python3 demos/01_special_functions.py
"""
import numpy as np

from stationary_polymer.special import (digamma, hermite_table, log_inverse_gamma_cdf, polygamma,
                                        sample_log_inverse_gamma)

# psi_k(1) = (-1)^{k+1} k! zeta(k+1); a few values
for k in range(5):
    print(f"psi_{k}(1) = {polygamma(k, 1.0): .15f}")

# the characteristic direction t = n psi_1(theta) for a few theta
for theta in (0.5, 1.0, 2.0):
    print(f"theta={theta}: psi_1 = {polygamma(1, theta):.6f}, so t(n=8) = {8 * polygamma(1, theta):.4f}")

# H_{k,t}(x) with generating function exp(lam x - lam^2 t / 2)
x = np.linspace(-2, 2, 5)
tab = hermite_table(4, 1.5, x)
print("H_{k,1.5}(x) at x =", x)
for k, row in enumerate(tab):
    print(f"  k={k}:", np.round(row, 4))

# Burke increments are distributed as log(1/X), X ~ Gamma(theta)
rng = np.random.default_rng(0)
draws = sample_log_inverse_gamma(2.0, rng, size=100_000)
print(f"log(1/X), theta=2: mean {draws.mean():.4f} (exact {-digamma(2.0):.4f}),"
      f" var {draws.var():.4f} (exact {polygamma(1, 2.0):.4f})")
grid = np.array([-1.0, 0.0, 1.0])
emp = [(draws <= g).mean() for g in grid]
print("cdf at", grid, "empirical", np.round(emp, 4), "exact", np.round(log_inverse_gamma_cdf(grid, 2.0), 4))
