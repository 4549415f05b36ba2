from __future__ import annotations

import numpy as np
import pytest
import scipy.stats

from gridsearch.stats import (
    StatisticsError,
    pearson,
    wilcoxon_signed_rank,
)
from oracles import brute_pearson, brute_wilcoxon


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3, 4], [2, 4, 6, 8]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [9, 6, 3]) == pytest.approx(-1.0)

    def test_hand_value(self):
        assert pearson([1, 2, 3], [2, 4, 7]) == pytest.approx(0.9934, abs=1e-3)

    def test_mismatched_lengths(self):
        with pytest.raises(StatisticsError):
            pearson([1, 2], [1, 2, 3])

    def test_too_few_samples(self):
        with pytest.raises(StatisticsError):
            pearson([1], [2])

    def test_zero_variance(self):
        with pytest.raises(StatisticsError, match="variance"):
            pearson([5, 5, 5], [1, 2, 3])

    def test_matches_brute_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 40))
            x = rng.normal(size=n)
            y = 0.4 * x + rng.normal(size=n)
            assert pearson(x, y) == pytest.approx(brute_pearson(x, y), abs=1e-12)

    def test_matches_scipy(self, rng):
        for _ in range(25):
            n = int(rng.integers(3, 60))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            expected = scipy.stats.pearsonr(x, y).statistic
            assert pearson(x, y) == pytest.approx(expected, abs=1e-12)


GOLDEN_BEFORE = [72, 65, 81, 79, 58, 66, 90, 74, 68, 77]
GOLDEN_AFTER = [75, 61, 87, 71, 60, 77, 81, 87, 67, 72]


class TestWilcoxon:
    def test_golden_fixture_exact(self):
        result = wilcoxon_signed_rank(GOLDEN_AFTER, GOLDEN_BEFORE)
        assert result.statistic == 25.0
        assert result.p_value == pytest.approx(0.845703125, abs=1e-12)
        assert result.n == 10
        assert result.method == "exact"

    def test_golden_fixture_matches_scipy(self):
        ours = wilcoxon_signed_rank(GOLDEN_AFTER, GOLDEN_BEFORE)
        ref = scipy.stats.wilcoxon(GOLDEN_AFTER, GOLDEN_BEFORE, mode="exact")
        assert ours.statistic == ref.statistic
        assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-12)

    def test_identical_samples_rejected(self):
        with pytest.raises(StatisticsError, match="zero"):
            wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])

    def test_zero_differences_dropped(self):
        # Pairs with a == b fall out; the rest carry the test.
        a = GOLDEN_AFTER + [50.0, 60.0]
        b = GOLDEN_BEFORE + [50.0, 60.0]
        result = wilcoxon_signed_rank(a, b)
        assert result.n == 10
        assert result.statistic == 25.0

    def test_large_shifted_sample_significant(self, rng):
        n = 486
        base = rng.normal(size=n)
        shifted = base + 0.5 + 0.1 * rng.normal(size=n)
        result = wilcoxon_signed_rank(shifted, base)
        assert result.method == "approx"
        assert result.n == n
        assert result.p_value < 0.001

    def test_exact_matches_brute_enumeration(self, rng):
        for _ in range(100):
            n = int(rng.integers(4, 13))
            a = rng.normal(size=n)
            b = a + rng.normal(size=n)
            if np.any(a - b == 0):
                continue
            result = wilcoxon_signed_rank(a, b)
            w_ref, p_ref = brute_wilcoxon(a, b)
            assert result.statistic == w_ref
            assert result.p_value == pytest.approx(p_ref, abs=1e-12)

    def test_exact_matches_scipy_without_ties(self, rng):
        # scipy's exact mode assumes untied ranks, so only tie-free draws
        # are comparable.
        checked = 0
        while checked < 30:
            n = int(rng.integers(5, 26))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            d = np.abs(a - b)
            if len(np.unique(d)) != n or np.any(d == 0):
                continue
            ours = wilcoxon_signed_rank(a, b)
            ref = scipy.stats.wilcoxon(a, b, mode="exact")
            assert ours.statistic == ref.statistic
            assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-12)
            checked += 1

    def test_approx_matches_scipy(self, rng):
        for _ in range(20):
            n = int(rng.integers(30, 120))
            a = rng.normal(size=n)
            b = a + rng.normal(size=n) * 0.7
            ours = wilcoxon_signed_rank(a, b)
            ref = scipy.stats.wilcoxon(
                a, b, mode="approx", correction=True
            )
            assert ours.method == "approx"
            assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-10)

    def test_approx_handles_tied_ranks(self):
        # Repeated magnitudes force average ranks and a tie correction.
        a = [float(i) for i in range(1, 31)]
        b = [v + (1.0 if i % 2 else 2.0) for i, v in enumerate(a)]
        result = wilcoxon_signed_rank(a, b)
        ref = scipy.stats.wilcoxon(a, b, mode="approx", correction=True)
        assert result.p_value == pytest.approx(ref.pvalue, abs=1e-10)

    def test_p_value_clamped_to_one(self):
        # Perfectly balanced signs push the two-sided formula past 1.
        a = [1.0, 2.0, -1.0, -2.0]
        b = [0.0, 0.0, 0.0, 0.0]
        result = wilcoxon_signed_rank(a, b)
        assert result.p_value <= 1.0

    def test_mismatched_lengths(self):
        with pytest.raises(StatisticsError):
            wilcoxon_signed_rank([1.0, 2.0], [1.0])
