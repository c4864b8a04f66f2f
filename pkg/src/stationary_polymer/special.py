"""Special functions: polygamma, variance-t Hermite polynomials, log-gamma reference draws.

The polygamma implementation shifts the argument upward with the recurrence
``psi_k(x + 1) = psi_k(x) + (-1)**k k! / x**(k+1)`` until it exceeds a
threshold, then sums the Bernoulli asymptotic expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_POLYGAMMA_ORDER = 12
_N_BERNOULLI_TERMS = 14


@lru_cache(maxsize=None)
def _bernoulli_even(count: int) -> tuple[float, ...]:
    """B_2, B_4, ..., B_{2*count} via the Akiyama-Tanigawa algorithm."""
    top = 2 * count
    a = [Fraction(0)] * (top + 1)
    out = []
    for m in range(top + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        if m >= 2 and m % 2 == 0:
            out.append(float(a[0]))
    return tuple(out)


def _asymptotic(k: int, x: float) -> float:
    b = _bernoulli_even(_N_BERNOULLI_TERMS)
    if k == 0:
        acc = math.log(x) - 0.5 / x
        x2 = x * x
        p = x2
        for j, b2j in enumerate(b, start=1):
            acc -= b2j / (2 * j * p)
            p *= x2
        return acc
    acc = math.factorial(k - 1) / x**k + math.factorial(k) / (2.0 * x ** (k + 1))
    for j, b2j in enumerate(b, start=1):
        coef = math.factorial(2 * j + k - 1) / math.factorial(2 * j)
        acc += b2j * coef / x ** (2 * j + k)
    return acc if k % 2 == 1 else -acc


def polygamma(k: int, theta: float) -> float:
    """k-th derivative of the digamma function at ``theta > 0``.

    ``polygamma(0, x)`` is the digamma function Gamma'/Gamma.
    """
    k = int(k)
    if k < 0 or k > MAX_POLYGAMMA_ORDER:
        raise ValueError(f"polygamma order must be in [0, {MAX_POLYGAMMA_ORDER}], got {k}")
    theta = float(theta)
    if not math.isfinite(theta) or theta <= 0:
        raise ValueError(f"polygamma requires theta > 0, got {theta}")

    threshold = 20.0 + k
    x = theta
    shift = 0.0
    if k == 0:
        while x < threshold:
            shift -= 1.0 / x
            x += 1.0
        return _asymptotic(0, x) + shift

    sign = -1.0 if k % 2 == 0 else 1.0  # (-1)**(k+1)
    kfact = math.factorial(k)
    terms = []
    while x < threshold:
        terms.append(1.0 / x ** (k + 1))
        x += 1.0
    # smallest terms first
    head = math.fsum(reversed(terms)) * kfact * sign
    return _asymptotic(k, x) + head


def digamma(theta: float) -> float:
    return polygamma(0, theta)


def trigamma(theta: float) -> float:
    return polygamma(1, theta)


def log_gamma(theta: float) -> float:
    if theta <= 0:
        raise ValueError(f"log_gamma requires theta > 0, got {theta}")
    return math.lgamma(theta)


@dataclass(frozen=True)
class PolygammaTable:
    """psi_0(theta), ..., psi_K(theta) for one theta."""

    theta: float
    values: tuple[float, ...]

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)


def polygamma_table(theta: float, max_order: int) -> PolygammaTable:
    values = tuple(polygamma(k, theta) for k in range(max_order + 1))
    for k in range(1, len(values)):
        if (-1) ** k * values[k] >= 0:
            raise ArithmeticError(f"sign invariant violated at k={k}, theta={theta}")
    return PolygammaTable(theta=float(theta), values=values)


def hermite(k: int, t: float, x):
    """Variance-t Hermite polynomial H_{k,t}(x).

    Normalised by the generating function exp(lam*x - lam**2*t/2) =
    sum_k lam**k / k! H_{k,t}(x), so H_2 = x**2 - t and H_3 = x**3 - 3tx.
    Accepts scalar or array ``x``.
    """
    if k < 0:
        raise ValueError("hermite order must be >= 0")
    if not t > 0:
        raise ValueError(f"hermite variance must be > 0, got {t}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for j in range(1, k):
        prev, cur = cur, x * cur - j * t * prev
    return cur if cur.ndim else float(cur)


def hermite_table(max_order: int, t: float, x) -> np.ndarray:
    """Rows H_{0,t}(x), ..., H_{max_order,t}(x); shape ``(max_order + 1,) + x.shape``."""
    if not t > 0:
        raise ValueError(f"hermite variance must be > 0, got {t}")
    x = np.asarray(x, dtype=float)
    out = np.empty((max_order + 1,) + x.shape)
    out[0] = 1.0
    if max_order >= 1:
        out[1] = x
    for j in range(1, max_order):
        out[j + 1] = x * out[j] - j * t * out[j - 1]
    return out


def sample_log_inverse_gamma(theta: float, rng: np.random.Generator, size=None):
    """Draw log(1/X) with X ~ Gamma(shape=theta, rate=1)."""
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    return -np.log(rng.standard_gamma(theta, size=size))


def log_inverse_gamma_cdf(x, theta: float):
    """CDF of log(1/X), X ~ Gamma(theta): P(-log X <= x) = P(X >= e^{-x})."""
    from scipy.special import gammaincc

    return gammaincc(theta, np.exp(-np.asarray(x, dtype=float)))
