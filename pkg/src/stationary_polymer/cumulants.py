"""Set partitions, joint cumulants and the exact cumulant formulas for log Z.

Formula terms carry exact integer coefficients. Floating point enters only
when a term list is evaluated against a table of mixed moments.

Notation: ``A`` is the centred free energy, ``H_b`` the variance-t Hermite
polynomial of B_0(t), and ``kappa_l`` the quenched cumulant of s_0^+ with the
convention ``kappa_0 = A``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from math import comb, factorial
from typing import Callable, Iterator, Mapping

import numpy as np

MAX_PARTITION_SIZE = 10
MAX_FORMULA_ORDER = 6


@dataclass(frozen=True)
class SetPartition:
    k: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = [i for b in self.blocks for i in b]
        if any(len(b) == 0 for b in self.blocks) or sorted(seen) != list(range(1, self.k + 1)):
            raise ValueError(f"not a partition of 1..{self.k}: {self.blocks}")

    def __len__(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return "|".join("".join(map(str, b)) if self.k < 10 else ",".join(map(str, b)) for b in self.blocks)


def bell_number(k: int) -> int:
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def enumerate_partitions(k: int) -> Iterator[SetPartition]:
    """All partitions of {1..k}, each once, in restricted-growth-string order."""
    if k < 0 or k > MAX_PARTITION_SIZE:
        raise ValueError(f"partition size must be in [0, {MAX_PARTITION_SIZE}], got {k}")
    if k == 0:
        yield SetPartition(0, ())
        return
    a = [0] * k
    while True:
        blocks: list[list[int]] = [[] for _ in range(max(a) + 1)]
        for i, label in enumerate(a, start=1):
            blocks[label].append(i)
        yield SetPartition(k, tuple(tuple(b) for b in blocks))
        # next restricted growth string: a[i] <= 1 + max(a[:i])
        i = k - 1
        while i > 0 and a[i] > max(a[:i]):
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, k):
            a[j] = 0


def joint_cumulant(moment_oracle: Callable[[tuple[int, ...]], float], k: int) -> float:
    """kappa(X_1..X_k) from an oracle returning E[prod_{i in B} X_i] for index tuples B."""
    total = 0.0
    cache: dict[tuple[int, ...], float] = {}
    for pi in enumerate_partitions(k):
        r = len(pi)
        prod = 1.0
        for b in pi.blocks:
            if b not in cache:
                cache[b] = float(moment_oracle(b))
            prod *= cache[b]
        total += factorial(r - 1) * (-1) ** (r - 1) * prod
    return total


@dataclass(frozen=True)
class FormulaTerm:
    """coefficient * prod over blocks of E[A^a H_b(B_0(t))]."""

    j: int
    partition: SetPartition
    coefficient: int
    factors: tuple[tuple[int, int], ...]

    def __str__(self) -> str:
        fac = " ".join(f"E[A^{a} H_{b}]" for a, b in self.factors)
        return f"j={self.j} pi={self.partition} coef={self.coefficient:+d}  {fac}"


def _block_factors(pi: SetPartition, j: int) -> tuple[tuple[int, int], ...]:
    out = []
    for b in pi.blocks:
        a = sum(1 for i in b if i <= j)
        out.append((a, len(b) - a))
    return tuple(out)


def _survives(pi: SetPartition, j: int) -> bool:
    for b in pi.blocks:
        if len(b) == 1:
            return False
        if min(b) > j:  # block inside {j+1..k}
            return False
    return True


def build_theorem_rhs(k: int) -> list[FormulaTerm]:
    """Terms of the explicit formula for kappa_k(log Z) + n(-1)^{k-1}psi_{k-1}(theta) + t*[k == 2].

    A (j, pi) pair is dropped entirely when pi has a singleton or a block inside {j+1..k}.
    """
    if not 2 <= k <= MAX_FORMULA_ORDER:
        raise ValueError(f"formula order must be in [2, {MAX_FORMULA_ORDER}], got {k}")
    terms = []
    for pi in enumerate_partitions(k):
        r = len(pi)
        for j in range(1, k):
            if not _survives(pi, j):
                continue
            coef = factorial(r - 1) * (-1) ** r * comb(k, j)
            terms.append(FormulaTerm(j=j, partition=pi, coefficient=coef, factors=_block_factors(pi, j)))
    return terms


def joint_cumulant_terms(j: int, k: int) -> list[FormulaTerm]:
    """Hermite expansion of kappa(A x j, B_0(t) x (k-j)) for 1 <= j <= k."""
    if not 1 <= j <= k:
        raise ValueError("need 1 <= j <= k")
    terms = []
    for pi in enumerate_partitions(k):
        if not _survives(pi, j):
            continue
        r = len(pi)
        terms.append(FormulaTerm(j=j, partition=pi, coefficient=factorial(r - 1) * (-1) ** (r - 1),
                                 factors=_block_factors(pi, j)))
    return terms


def evaluate_terms(terms, table: Mapping[tuple[int, int], float]) -> float:
    """Sum of the terms with E[A^a H_b] looked up in ``table[(a, b)]``."""
    total = 0.0
    for term in terms:
        prod = float(term.coefficient)
        for ab in term.factors:
            prod *= table[ab]
        total += prod
    return total


def format_terms(terms) -> str:
    """Human-readable dump of a term list, one term per line."""
    return "\n".join(str(t) for t in terms)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def hermite_to_quenched(a: int, b: int) -> list[tuple[int, tuple[int, ...]]]:
    """E[A^a H_b(B_0)] = sum of coef * E[prod_i kappa_{l_i}] over compositions l of b into a parts.

    Returns (coef, l) pairs with coef = (-1)^b b! / prod l_i!; slots with l_i = 0 stand for A.
    """
    if a < 0 or b < 0:
        raise ValueError("need a, b >= 0")
    if a == 0 and b > 0:
        return []
    sign = (-1) ** b
    out = []
    for ell in _compositions(b, a):
        coef = sign * factorial(b)
        for li in ell:
            coef //= factorial(li)
        out.append((coef, ell))
    return out


QuenchedMonomial = tuple[tuple[int, ...], ...]  # one sorted l-multiset per expectation factor


def _multiply(polys: list[dict]) -> dict:
    acc: dict = {(): 1}
    for poly in polys:
        nxt: dict = defaultdict(int)
        for k1, c1 in acc.items():
            for k2, c2 in poly.items():
                nxt[tuple(sorted(k1 + k2))] += c1 * c2
        acc = nxt
    return acc


def quenched_polynomial(terms) -> dict[QuenchedMonomial, int]:
    """Rewrite a Hermite-form term list in quenched-cumulant form (exact integer coefficients)."""
    factor_cache: dict[tuple[int, int], dict] = {}
    out: dict = defaultdict(int)
    for term in terms:
        polys = []
        for ab in term.factors:
            if ab not in factor_cache:
                poly: dict = defaultdict(int)
                for coef, ell in hermite_to_quenched(*ab):
                    poly[(tuple(sorted(ell)),)] += coef
                factor_cache[ab] = dict(poly)
            polys.append(factor_cache[ab])
        for mono, c in _multiply(polys).items():
            out[mono] += term.coefficient * c
    return {m: c for m, c in sorted(out.items()) if c != 0}


# closed forms of the right-hand side in quenched form, for k = 2, 3, 4
CLOSED_FORMS: dict[int, dict[QuenchedMonomial, int]] = {
    2: {((1,),): 2},
    3: {((0, 1),): 6, ((2,),): -3},
    4: {
        ((3,),): 4,
        ((0, 2),): -12,
        ((1, 1),): -12,
        ((1,), (1,)): 12,
        ((0, 0, 1),): 12,
        ((0, 0), (1,)): -12,
    },
}


def evaluate_quenched(poly: Mapping[QuenchedMonomial, int], kappa: np.ndarray, centered: np.ndarray) -> float:
    """Evaluate a quenched polynomial on per-sample data.

    ``kappa[:, l-1]`` holds kappa_l of each sample, ``centered`` the centred free energy
    (kappa_0). Expectations are plain sample means.
    """
    cols = {0: np.asarray(centered, dtype=float)}
    means: dict[tuple[int, ...], float] = {}
    total = 0.0
    for mono, coef in poly.items():
        prod = float(coef)
        for ell in mono:
            if ell not in means:
                v = np.ones_like(cols[0])
                for li in ell:
                    if li not in cols:
                        cols[li] = np.asarray(kappa[:, li - 1], dtype=float)
                    v = v * cols[li]
                means[ell] = float(np.mean(v))
            prod *= means[ell]
        total += prod
    return total


def closed_form_k3(kappa: np.ndarray, centered: np.ndarray) -> float:
    """6 E[A kappa_1] - 3 E[kappa_2]: the k = 3 right-hand side written out."""
    k1, k2 = kappa[:, 0], kappa[:, 1]
    return 6.0 * np.mean(centered * k1) - 3.0 * np.mean(k2)


def closed_form_k4(kappa: np.ndarray, centered: np.ndarray) -> float:
    """4E[kappa_3] + 12Cov(kappa_1, A^2) - 12Var(kappa_1) - 12E[kappa_2 A]: the k = 4 right-hand side."""
    k1, k2, k3 = kappa[:, 0], kappa[:, 1], kappa[:, 2]
    a2 = centered * centered
    cov = np.mean(k1 * a2) - np.mean(k1) * np.mean(a2)
    var = np.mean(k1 * k1) - np.mean(k1) ** 2
    return 4.0 * np.mean(k3) + 12.0 * cov - 12.0 * var - 12.0 * np.mean(k2 * centered)


def polygamma_shift(k: int, n: int, theta: float, t: float) -> float:
    """n(-1)^{k-1} psi_{k-1}(theta) + t [k == 2], the known part of the formula's left side."""
    from .special import polygamma

    return n * (-1) ** (k - 1) * polygamma(k - 1, theta) + (t if k == 2 else 0.0)


@dataclass(frozen=True)
class MixedMomentTable:
    """Sample estimates of E[A^a H_b(B_0(t))] (and the tau analogue) with standard errors."""

    hermite_t: dict
    hermite_t_se: dict
    hermite_tau: dict
    hermite_tau_se: dict
    n_samples: int


def mixed_moment_table(centered: np.ndarray, hermite_t: np.ndarray, hermite_tau: np.ndarray | None,
                       order: int) -> MixedMomentTable:
    """``hermite_t[:, b]`` holds H_{b,t}(B_0(t)) per sample; entries for a + b <= order."""
    a_col = np.asarray(centered, dtype=float)
    n = a_col.size

    def build(h):
        est, se = {}, {}
        if h is None:
            return est, se
        for a in range(order + 1):
            for b in range(order + 1 - a):
                v = a_col ** a * h[:, b]
                est[(a, b)] = float(np.mean(v))
                se[(a, b)] = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
        return est, se

    ht, hts = build(np.asarray(hermite_t))
    hu, hus = build(None if hermite_tau is None else np.asarray(hermite_tau))
    return MixedMomentTable(hermite_t=ht, hermite_t_se=hts, hermite_tau=hu, hermite_tau_se=hus, n_samples=n)


@dataclass(frozen=True)
class KStatistics:
    values: np.ndarray
    degenerate: bool


def k_statistics(samples, kmax: int = 4) -> KStatistics:
    """Unbiased k-statistics k_1..k_kmax (kmax <= 4) of an i.i.d. sample."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if not 1 <= kmax <= 4:
        raise ValueError("k-statistics implemented for orders 1..4")
    if n <= kmax:
        raise ValueError(f"need more than {kmax} samples, got {n}")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d ** 2))
    degenerate = m2 == 0.0
    out = [mean]
    if kmax >= 2:
        out.append(n / (n - 1) * m2)
    if kmax >= 3:
        m3 = float(np.mean(d ** 3))
        out.append(n * n / ((n - 1) * (n - 2)) * m3)
    if kmax >= 4:
        m4 = float(np.mean(d ** 4))
        out.append(n * n * ((n + 1) * m4 - 3 * (n - 1) * m2 * m2) / ((n - 1) * (n - 2) * (n - 3)))
    if degenerate:
        out[1:] = [0.0] * (len(out) - 1)
    return KStatistics(values=np.array(out), degenerate=degenerate)
