"""Tests for order-statistic sample quantiles."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from covcal.errors import DomainError
from covcal.quantiles import ScoreSet, order_index, sample_quantile

WORKED_SAMPLE = [1, 3, 3, 4, 5, 7, 8, 9, 9, 12, 15]


class TestOrderIndex:
    def test_worked_example(self):
        assert order_index(11, 0.9) == 10

    def test_exact_integer_product(self):
        assert order_index(100, 0.5) == 50

    def test_just_above_integer(self):
        assert order_index(100, 0.901) == 91

    def test_float_product_guard(self):
        # 20 * 0.95 = 19.000000000000004 in binary; must still give 19
        assert order_index(20, 0.95) == 19
        # 3 * (1/3) = 0.9999999999999998; must still give 1
        assert order_index(3, 1.0 / 3.0) == 1

    def test_fraction_path_is_exact(self):
        assert order_index(100, Fraction(901, 1000)) == 91
        assert order_index(20, Fraction(19, 20)) == 19
        for n in range(1, 200):
            for num in (1, n // 2, n - 1):
                if 0 < num < n:
                    q = Fraction(num, n)
                    assert order_index(n, q) == num  # n*q integer: no off-by-one

    def test_bounds(self):
        assert order_index(5, 0.999) == 5
        assert order_index(5, 1e-9) == 1

    @pytest.mark.parametrize("q", [0.0, 1.0, -0.5, 1.5, float("nan")])
    def test_rejects_levels_outside_open_interval(self, q):
        with pytest.raises(DomainError):
            order_index(10, q)

    def test_rejects_bad_n(self):
        with pytest.raises(DomainError):
            order_index(0, 0.5)


class TestScoreSet:
    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            ScoreSet([])

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            ScoreSet([1.0, float("inf")])
        with pytest.raises(DomainError):
            ScoreSet([1.0, float("nan")])

    def test_sorted_flag_verified(self):
        ScoreSet([1.0, 2.0, 2.0, 3.0], sorted_flag=True)
        with pytest.raises(DomainError):
            ScoreSet([2.0, 1.0], sorted_flag=True)

    def test_order_statistic_bounds(self):
        s = ScoreSet([3.0, 1.0, 2.0])
        assert s.order_statistic(1) == 1.0
        assert s.order_statistic(3) == 3.0
        with pytest.raises(DomainError):
            s.order_statistic(0)
        with pytest.raises(DomainError):
            s.order_statistic(4)


class TestSampleQuantile:
    def test_worked_example(self):
        assert sample_quantile(ScoreSet(WORKED_SAMPLE), 0.9) == 12.0

    def test_constant_sample(self):
        s = ScoreSet([4.2] * 17)
        for q in [0.01, 0.25, 0.5, 0.75, 0.99]:
            assert sample_quantile(s, q) == 4.2

    def test_against_full_sort_oracle(self):
        rng = np.random.default_rng(11)
        draws = rng.uniform(size=1000)
        s = ScoreSet(draws)
        expected = sorted(draws.tolist())[500 - 1]  # m = ceil(1000*0.5) = 500
        assert sample_quantile(s, 0.5) == expected

    def test_monotone_in_level(self):
        rng = np.random.default_rng(5)
        s = ScoreSet(rng.normal(size=137))
        levels = np.linspace(0.01, 0.99, 33)
        values = [sample_quantile(s, float(q)) for q in levels]
        assert all(v2 >= v1 for v1, v2 in zip(values, values[1:]))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        base = rng.normal(size=50).tolist()
        shuffled = base[:]
        rng.shuffle(shuffled)
        for q in [0.1, 0.5, 0.9]:
            assert sample_quantile(ScoreSet(base), q) == sample_quantile(ScoreSet(shuffled), q)

    def test_duplicates_are_legitimate(self):
        s = ScoreSet([1.0, 2.0, 2.0, 2.0, 3.0])
        assert sample_quantile(s, 0.4) == 2.0
        assert sample_quantile(s, 0.6) == 2.0
        assert sample_quantile(s, 0.8) == 2.0
