"""Rank tests on residuals: Mann-Whitney U and Wilcoxon signed-rank.

Small samples get exact null distributions; larger ones a normal
approximation with tie-corrected variance and a 0.5 continuity correction.
Midranks are used throughout.  Doubling midranks makes them integers, so the
exact null distribution is a plain counting problem solved by dynamic
programming, and exact p-values come back as ``Fraction`` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

TWO_SIDED = "two-sided"
LESS = "one-sided-less"
GREATER = "one-sided-greater"
EXACT = "exact"
NORMAL = "normal-approximation"

EXACT_BOUND = 20

_TAIL_ALIASES = {
    "two-sided": TWO_SIDED,
    "two": TWO_SIDED,
    "less": LESS,
    "one-sided-less": LESS,
    "greater": GREATER,
    "one-sided-greater": GREATER,
}

_STD_NORMAL = NormalDist()
# normal tails underflow to 0; p-values are kept strictly positive
_TINY = math.ulp(0.0)


def normalize_tail(tail: str) -> str:
    try:
        return _TAIL_ALIASES[tail]
    except KeyError:
        raise ValueError(f"unknown tail {tail!r}") from None


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    tail: str
    method: str
    n1: int
    n2: Optional[int] = None
    p_exact: Optional[Fraction] = None

    __test__ = False  # not a pytest class


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties sharing the mean of their positions."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=float)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _tie_term(ranks: np.ndarray) -> float:
    _, counts = np.unique(ranks, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _tail_probs(counts: np.ndarray, observed: int, total: int) -> tuple[Fraction, Fraction]:
    lower = int(counts[: observed + 1].sum())
    upper = int(counts[observed:].sum())
    return Fraction(lower, total), Fraction(upper, total)


def _pick(tail: str, lower, upper):
    if tail == LESS:
        return lower
    if tail == GREATER:
        return upper
    return min(Fraction(1), 2 * min(lower, upper))


def _normal_p(z_less: float, z_greater: float, tail: str, dev: float, sigma: float) -> float:
    if tail == LESS:
        return _STD_NORMAL.cdf(z_less)
    if tail == GREATER:
        return 1.0 - _STD_NORMAL.cdf(z_greater)
    z = max(abs(dev) - 0.5, 0.0) / sigma
    return min(1.0, 2.0 * (1.0 - _STD_NORMAL.cdf(z)))


def _subset_sum_counts(weights: np.ndarray, size: int) -> np.ndarray:
    """counts[s] = number of ``size``-subsets of ``weights`` summing to s."""
    total = int(weights.sum())
    table = np.zeros((size + 1, total + 1), dtype=np.int64)
    table[0, 0] = 1
    for w in weights:
        w = int(w)
        for j in range(size, 0, -1):
            table[j, w:] += table[j - 1, : total + 1 - w]
    return table[size]


def mann_whitney_u(a: Sequence[float], b: Sequence[float], tail: str = TWO_SIDED) -> TestResult:
    """Mann-Whitney U test of sample ``a`` against ``b``.

    ``one-sided-less`` is the alternative that ``a`` tends to be smaller.
    The reported statistic is U for ``a``.
    """
    tail = normalize_tail(tail)
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise DataError("Mann-Whitney U needs two non-empty samples")
    n1, n2 = a.size, b.size
    ranks = midranks(np.concatenate([a, b]))
    rank_sum = float(ranks[:n1].sum())
    u = rank_sum - n1 * (n1 + 1) / 2.0

    if n1 + n2 <= EXACT_BOUND:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _subset_sum_counts(doubled, n1)
        observed = int(doubled[:n1].sum())
        lower, upper = _tail_probs(counts, observed, math.comb(n1 + n2, n1))
        p = _pick(tail, lower, upper)
        return TestResult(u, float(p), tail, EXACT, n1, n2, p_exact=p)

    n = n1 + n2
    mu = n1 * n2 / 2.0
    var = n1 * n2 / 12.0 * ((n + 1) - _tie_term(ranks) / (n * (n - 1)))
    if var <= 0:
        return TestResult(u, 1.0, tail, NORMAL, n1, n2)
    sigma = math.sqrt(var)
    p = _normal_p((u - mu + 0.5) / sigma, (u - mu - 0.5) / sigma, tail, u - mu, sigma)
    return TestResult(u, max(p, _TINY), tail, NORMAL, n1, n2)


def wilcoxon_signed_rank(x: Sequence[float], y: Optional[Sequence[float]] = None, tail: str = TWO_SIDED) -> TestResult:
    """Wilcoxon signed-rank test on paired differences.

    Pass either the differences ``x`` alone or two paired samples, in which
    case the differences are ``x - y``.  Zero differences are dropped.
    ``one-sided-greater`` is the alternative that differences tend to be
    positive.  The statistic is W+ for one-sided tails and min(W+, W-) for
    the two-sided test.
    """
    tail = normalize_tail(tail)
    d = np.asarray(x, dtype=float).reshape(-1)
    if y is not None:
        other = np.asarray(y, dtype=float).reshape(-1)
        if other.shape != d.shape:
            raise DataError("paired samples differ in length")
        d = d - other
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise DataError("all paired differences are zero; the signed-rank test is undefined")
    ranks = midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = w_plus if tail != TWO_SIDED else min(w_plus, w_minus)

    if n <= EXACT_BOUND:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = np.zeros(int(doubled.sum()) + 1, dtype=np.int64)
        counts[0] = 1
        for r in doubled:
            shifted = np.zeros_like(counts)
            shifted[r:] = counts[: counts.size - r]
            counts = counts + shifted
        observed = int(doubled[d > 0].sum())
        lower, upper = _tail_probs(counts, observed, 2**n)
        p = _pick(tail, lower, upper)
        return TestResult(statistic, float(p), tail, EXACT, n, p_exact=p)

    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(ranks) / 48.0
    if var <= 0:
        return TestResult(statistic, 1.0, tail, NORMAL, n)
    sigma = math.sqrt(var)
    p = _normal_p((w_plus - mu + 0.5) / sigma, (w_plus - mu - 0.5) / sigma, tail, w_plus - mu, sigma)
    return TestResult(statistic, max(p, _TINY), tail, NORMAL, n)
