"""Tests for the coverage law and the exact marginal-gap formulas."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from covcal.coverage import (
    CoverageLaw,
    coverage_cdf,
    coverage_ppf,
    expected_coverage,
    marginal_gap_classic,
    marginal_gap_simple,
)
from covcal.errors import DomainError, InfeasibleGuaranteeError

from oracles import bisect_inverse


class TestCoverageCdf:
    def test_uniform_law(self):
        law = CoverageLaw(m=1, n_cal=1)
        assert coverage_cdf(law, 0.5) == pytest.approx(0.5, abs=1e-13)

    def test_working_example_values(self):
        # classic predictor, n_cal=100 at nominal 0.9: m = 91
        law = CoverageLaw(m=91, n_cal=100)
        assert coverage_cdf(law, 0.90) == pytest.approx(0.46, abs=0.02)
        assert coverage_cdf(law, 0.86) == pytest.approx(0.10, abs=0.02)

    def test_strictly_decreasing_in_m(self):
        # strict once values leave the float-saturated tails (the CDF of
        # tiny m rounds to exactly 1.0 in double precision)
        for n in [10, 50, 200]:
            for c in [0.3, 0.7, 0.9]:
                values = [coverage_cdf(CoverageLaw(m=m, n_cal=n), c) for m in range(1, n + 1)]
                assert all(v2 <= v1 for v1, v2 in zip(values, values[1:]))
                interior = [v for v in values if 1e-14 < v < 1.0 - 1e-14]
                assert len(interior) >= 3
                assert all(v2 < v1 for v1, v2 in zip(interior, interior[1:]))

    def test_domain(self):
        law = CoverageLaw(m=3, n_cal=5)
        with pytest.raises(DomainError):
            coverage_cdf(law, 1.5)
        with pytest.raises(DomainError):
            CoverageLaw(m=6, n_cal=5)
        with pytest.raises(DomainError):
            CoverageLaw(m=0, n_cal=5)

    def test_empirical_law_equivalence(self):
        # m-th order statistic of n uniforms must follow the law
        rng = np.random.default_rng(2024)
        n, m, reps = 10, 9, 20000
        stats = np.sort(rng.random((reps, n)), axis=1)[:, m - 1]
        stats.sort()
        law = CoverageLaw(m=m, n_cal=n)
        f = np.array([coverage_cdf(law, float(v)) for v in stats])
        hi = np.arange(1, reps + 1) / reps
        lo = np.arange(0, reps) / reps
        ks = max(np.max(hi - f), np.max(f - lo))
        assert ks < 1.63 / np.sqrt(reps)  # 99% KS critical value


class TestCoveragePpf:
    def test_uniform(self):
        law = CoverageLaw(m=1, n_cal=1)
        assert coverage_ppf(law, 0.3) == pytest.approx(0.3, abs=1e-12)

    def test_small_sample_floor_via_bisection(self):
        law = CoverageLaw(m=91, n_cal=100)
        expected = bisect_inverse(lambda c: coverage_cdf(law, c), 0.05)
        assert coverage_ppf(law, 0.05) == pytest.approx(expected, abs=1e-9)

    def test_round_trip(self):
        rng = np.random.default_rng(6)
        law = CoverageLaw(m=37, n_cal=80)
        for p in rng.uniform(0.001, 0.999, 25):
            assert coverage_cdf(law, coverage_ppf(law, float(p))) == pytest.approx(
                float(p), abs=1e-9)


class TestExpectedCoverage:
    def test_classic_example(self):
        assert expected_coverage(CoverageLaw(m=91, n_cal=100)) == pytest.approx(91 / 101)

    def test_single_point(self):
        assert expected_coverage(CoverageLaw(m=1, n_cal=1)) == pytest.approx(0.5)

    def test_matches_mc_mean_of_order_statistic(self):
        rng = np.random.default_rng(77)
        n, q, reps = 25, 0.8, 40000
        m = 20  # ceil(25 * 0.8)
        stats = np.sort(rng.random((reps, n)), axis=1)[:, m - 1]
        se = stats.std(ddof=1) / np.sqrt(reps)
        assert abs(stats.mean() - expected_coverage(CoverageLaw(m=m, n_cal=n))) <= 3 * se


class TestMarginalGapSimple:
    def test_integer_case(self):
        assert marginal_gap_simple(10, 0.5) == Fraction(-1, 22)
        assert marginal_gap_simple(100, 0.9) == Fraction(90, 101) - Fraction(9, 10)

    def test_general_case(self):
        assert marginal_gap_simple(100, 0.905) == Fraction(91, 101) - Fraction(181, 200)

    def test_cross_check_against_expected_coverage(self):
        for n, c in [(10, 0.5), (100, 0.905), (33, 0.7), (7, 0.99)]:
            import math
            m = math.ceil(n * Fraction(c).limit_denominator(10**9))
            gap = float(marginal_gap_simple(n, c))
            assert gap == pytest.approx(expected_coverage(CoverageLaw(m=m, n_cal=n)) - c,
                                        abs=1e-12)

    def test_bounds_on_grid(self):
        for n in [1, 2, 7, 50, 123]:
            for k in range(1, 100):
                gap = marginal_gap_simple(n, Fraction(k, 100))
                assert Fraction(-1, n + 1) <= gap <= Fraction(1, n + 1)


class TestMarginalGapClassic:
    def test_zero_gap_when_product_is_integer(self):
        assert marginal_gap_classic(9, 0.5) == 0

    def test_general_case_examples(self):
        # (10, 0.5): (N+1)*c = 5.5 -> m = 6, gap = 6/11 - 1/2 = 1/22
        assert marginal_gap_classic(10, 0.5) == Fraction(1, 22)
        assert marginal_gap_classic(100, 0.9) == Fraction(91, 101) - Fraction(9, 10)
        assert float(marginal_gap_classic(100, 0.9)) == pytest.approx(0.000990, abs=1e-6)

    def test_infeasible(self):
        with pytest.raises(InfeasibleGuaranteeError):
            marginal_gap_classic(10, 0.99)

    def test_conservative_bounds_on_grid(self):
        for n in [1, 2, 7, 50, 123]:
            for k in range(1, 100):
                c = Fraction(k, 100)
                try:
                    gap = marginal_gap_classic(n, c)
                except InfeasibleGuaranteeError:
                    assert (n + 1) * c > n
                    continue
                assert 0 <= gap <= Fraction(1, n + 1)

    def test_fraction_and_float_inputs_agree(self):
        assert marginal_gap_classic(100, 0.9) == marginal_gap_classic(100, Fraction(9, 10))
        assert marginal_gap_simple(100, 0.905) == marginal_gap_simple(100, Fraction(181, 200))
