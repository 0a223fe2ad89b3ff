"""Tests for the small-sample guarantee solvers and the size planner."""

from __future__ import annotations

import math

import numpy as np
import pytest

from covcal.coverage import CoverageLaw, coverage_cdf
from covcal.errors import DomainError, InfeasibleGuaranteeError
from covcal.quantiles import guarded_product_ceil
from covcal.small_sample import (
    PlanResult,
    c_min_of,
    g_bounds,
    min_calibration_size,
    solve_level,
)
from covcal.conformal import classic_level

from oracles import bisect_inverse


def brute_force_min_m(n_cal: int, c_min: float, alpha: float) -> int | None:
    """Scan every order index; the independent oracle for solve_level."""
    for m in range(1, n_cal + 1):
        if coverage_cdf(CoverageLaw(m=m, n_cal=n_cal), c_min) <= alpha:
            return m
    return None


class TestSolveLevel:
    def test_reference_point_against_scan(self):
        res = solve_level(100, 0.9, 0.05)
        assert res.m == brute_force_min_m(100, 0.9, 0.05)
        assert res.q_tilde > 0.91  # strictly above the classic level
        assert res.m == math.ceil(res.m_bar)
        assert res.achieved_confidence >= 0.95

    def test_matches_scan_on_grid(self):
        for n in [10, 37, 80, 250]:
            for c_min in [0.5, 0.8, 0.9]:
                for alpha in [0.05, 0.2]:
                    expected = brute_force_min_m(n, c_min, alpha)
                    if expected is None:
                        with pytest.raises(InfeasibleGuaranteeError):
                            solve_level(n, c_min, alpha)
                    else:
                        assert solve_level(n, c_min, alpha).m == expected

    def test_converges_to_classic_level(self):
        gaps = []
        for n in [100, 1000, 10000, 100000]:
            q_tilde = solve_level(n, 0.9, 0.05).q_tilde
            q_star = float(classic_level(n, 0.9))
            gaps.append(abs(q_tilde - q_star))
        assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
        assert gaps[-1] < 0.005

    def test_nearly_vacuous_alpha(self):
        res = solve_level(50, 0.9, 0.999)
        assert res.m == brute_force_min_m(50, 0.9, 0.999)
        assert res.achieved_confidence >= 0.001

    def test_infeasible_raises_with_context(self):
        with pytest.raises(InfeasibleGuaranteeError) as exc:
            solve_level(20, 0.9, 0.05)
        assert exc.value.n_cal == 20

    def test_minimality(self):
        for n, c_min, alpha in [(100, 0.9, 0.05), (250, 0.8, 0.1), (60, 0.7, 0.02)]:
            res = solve_level(n, c_min, alpha)
            assert coverage_cdf(CoverageLaw(m=res.m, n_cal=n), c_min) <= alpha
            if res.m > 1:
                assert coverage_cdf(CoverageLaw(m=res.m - 1, n_cal=n), c_min) > alpha

    def test_monotonicity_of_continuous_root(self):
        # m_bar decreasing in alpha, increasing in c_min; q_tilde
        # decreasing in n_cal
        roots_alpha = [solve_level(100, 0.9, a).m_bar for a in [0.02, 0.05, 0.1, 0.2]]
        assert all(r2 < r1 for r1, r2 in zip(roots_alpha, roots_alpha[1:]))
        roots_cmin = [solve_level(200, c, 0.1).m_bar for c in [0.6, 0.7, 0.8, 0.9]]
        assert all(r2 > r1 for r1, r2 in zip(roots_cmin, roots_cmin[1:]))
        levels_n = [solve_level(n, 0.9, 0.05).m_bar / n for n in [60, 120, 240, 480, 960]]
        assert all(l2 < l1 for l1, l2 in zip(levels_n, levels_n[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            solve_level(0, 0.9, 0.05)
        with pytest.raises(DomainError):
            solve_level(10, 1.2, 0.05)
        with pytest.raises(DomainError):
            solve_level(10, 0.9, 0.0)


class TestCMinOf:
    def test_uniform_law(self):
        assert c_min_of(1, 1, 0.05) == pytest.approx(0.05, abs=1e-10)

    def test_classic_predictor_floor(self):
        floor = c_min_of(100, 91, 0.05)
        law = CoverageLaw(m=91, n_cal=100)
        expected = bisect_inverse(lambda c: coverage_cdf(law, c), 0.05)
        assert floor == pytest.approx(expected, abs=1e-9)
        assert floor < 0.86 < 0.9  # the 5% point sits below both markers

    def test_round_trip_with_solve_level(self):
        for n in [30, 100, 400]:
            for m in [n // 2, (3 * n) // 4, n - 1]:
                for alpha in [0.05, 0.1]:
                    floor = c_min_of(n, m, alpha)
                    assert solve_level(n, floor, alpha).m <= m

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            c_min_of(10, 0, 0.05)
        with pytest.raises(DomainError):
            c_min_of(10, 11, 0.05)


class TestGBounds:
    def test_exact_at_integer_product(self):
        # when n*q_tilde is an integer the conservative bound IS the
        # integer curve
        for n in [20, 40, 60, 100]:
            q = 0.95
            m = guarded_product_ceil(n, q)
            if abs(n * q - m) > 1e-9:
                continue
            g_lo, g_up = g_bounds(n, q, 0.9, 0.05)
            g_int = coverage_cdf(CoverageLaw(m=m, n_cal=n), 0.9) - 0.05
            assert g_up == g_int
            assert g_lo <= g_int

    def test_sandwich_on_random_grid(self):
        rng = np.random.default_rng(15)
        for _ in range(200):
            n = int(rng.integers(5, 400))
            q = float(rng.uniform(0.5, 0.99))
            c_min = float(rng.uniform(0.3, q))
            alpha = float(rng.uniform(0.01, 0.3))
            m = min(guarded_product_ceil(n, q), n)
            g_lo, g_up = g_bounds(n, q, c_min, alpha)
            g_int = coverage_cdf(CoverageLaw(m=m, n_cal=n), c_min) - alpha
            assert g_lo <= g_int + 1e-12
            assert g_int <= g_up + 1e-12

    def test_degenerate_level_one(self):
        # q_tilde = 1: conservative law is Beta(n, 1) with CDF c^n
        n, c_min, alpha = 25, 0.9, 0.05
        g_lo, g_up = g_bounds(n, 1.0, c_min, alpha)
        assert g_up == pytest.approx(c_min ** n - alpha, abs=1e-12)
        assert g_lo == -alpha


class TestMinCalibrationSize:
    def test_reference_bracket(self):
        plan = min_calibration_size(0.9, 0.95, 0.05)
        assert plan == PlanResult(n_inf=63, n_sup=107)

    def test_bracket_contains_scan_minimum(self):
        cmin, qt, alpha = 0.9, 0.95, 0.05
        plan = min_calibration_size(cmin, qt, alpha)

        def g_int(n):
            m = min(guarded_product_ceil(n, qt), n)
            return coverage_cdf(CoverageLaw(m=m, n_cal=n), cmin) - alpha

        scan_min = next(n for n in range(1, plan.n_sup + 1) if g_int(n) <= 0)
        assert plan.n_inf <= scan_min <= plan.n_sup

    def test_bracket_validity_at_edges(self):
        cmin, qt, alpha = 0.9, 0.95, 0.05
        plan = min_calibration_size(cmin, qt, alpha)
        # above the bracket the solver lands within half a step of q_tilde
        n = plan.n_sup + 1
        res = solve_level(n, cmin, alpha)
        assert abs(res.q_tilde - qt) <= 0.5 / n
        # below the bracket no in-slack model reaches the target
        n = plan.n_inf - 1
        lo, hi = n * qt - 0.5, n * qt + 0.5
        window = [m for m in range(max(1, math.floor(lo)), min(n, math.ceil(hi)) + 1)
                  if lo <= m <= hi]
        assert window
        for m in window:
            assert coverage_cdf(CoverageLaw(m=m, n_cal=n), cmin) > alpha

    def test_vacuous_target(self):
        plan = min_calibration_size(1e-6, 0.5, 0.05)
        assert plan == PlanResult(n_inf=1, n_sup=1)

    def test_unreachable_target_errors(self):
        # level below the floor: the law concentrates under c_min forever
        with pytest.raises(InfeasibleGuaranteeError):
            min_calibration_size(0.9, 0.8, 0.05, cap=10**4)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            min_calibration_size(0.9, 1.0, 0.05)
        with pytest.raises(DomainError):
            min_calibration_size(0.9, 0.95, 0.05, slack=0.0)
