"""Paired-sample statistics used by the evaluation analyses.

Both tests are written out from their textbook definitions so that the exact
conventions (tie handling, zero-difference handling, two-sided p) are pinned
here rather than inherited from a library version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Above this many non-zero differences the signed-rank null is approximated
# by a normal with continuity and tie corrections; below, enumerated exactly.
WILCOXON_EXACT_LIMIT = 25


class StatisticsError(ValueError):
    """Inputs outside a statistic's domain."""


def pearson(x, y) -> float:
    """Product-moment correlation coefficient of two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise StatisticsError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise StatisticsError("need at least 2 samples")
    xd = x - x.mean()
    yd = y - y.mean()
    sxx = float(xd @ xd)
    syy = float(yd @ yd)
    if sxx == 0.0 or syy == 0.0:
        raise StatisticsError("zero variance")
    return float(xd @ yd) / math.sqrt(sxx * syy)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    # Ranks 1..n with tied values sharing the mean of their positions.
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    method: str


def _exact_p(doubled_ranks: list[int], doubled_w: int, n: int) -> float:
    # Count sign assignments with doubled W+ <= doubled_w by dynamic
    # programming over achievable doubled-rank sums; exact in Python ints.
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    tail = sum(counts[: doubled_w + 1])
    return min(1.0, 2.0 * tail / (1 << n))


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped. The statistic is min(W+, W-). For up to
    25 non-zero pairs the p-value enumerates the exact null; beyond that it
    uses the normal approximation with continuity and tie corrections.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StatisticsError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    d = d[d != 0.0]
    n = int(d.size)
    if n == 0:
        raise StatisticsError("all differences zero")
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if n <= WILCOXON_EXACT_LIMIT:
        doubled = [int(round(2.0 * r)) for r in ranks]
        p = _exact_p(doubled, int(round(2.0 * w)), n)
        return WilcoxonResult(statistic=w, p_value=p, n=n, method="exact")
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    variance -= float(((tie_counts**3) - tie_counts).sum()) / 48.0
    if variance == 0.0:
        raise StatisticsError("zero variance in signed ranks")
    z = (w - mean + 0.5) / math.sqrt(variance)
    p = min(1.0, 2.0 * (0.5 * math.erfc(-z / math.sqrt(2.0))))
    return WilcoxonResult(statistic=w, p_value=p, n=n, method="approx")
