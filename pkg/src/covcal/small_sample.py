"""Solvers for the small-sample coverage guarantee P(C >= c_min) >= 1 - alpha.

The classic conformal guarantee only pins the *average* coverage over an
ensemble of calibration sets, which says little about the one predictor
you actually built when n_cal is small.  The operations here pin the
coverage of that single predictor instead:

* :func:`solve_level` - given n_cal, find the smallest order index m
  (equivalently the corrected level q = m/n_cal) whose coverage law
  Beta(m, n_cal-m+1) puts at most alpha of its mass below c_min.
* :func:`c_min_of` - the reverse: the coverage floor an existing
  m-of-n_cal predictor holds with confidence 1 - alpha.
* :func:`min_calibration_size` - planning: the bracket [n_inf, n_sup] of
  calibration sizes inside which a target (c_min, alpha) first becomes
  reachable at a desired level q_tilde.

The solver works on g(m) = F_C(c_min; m) - alpha, with F_C the coverage
CDF.  g is strictly decreasing and continuous in a *real-valued* m, so a
bracketed bisection finds its root m_bar and the integer index is the
ceiling m = ceil(m_bar) (ceiling, never rounding: the conservative side).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from covcal.coverage import CoverageLaw, coverage_cdf, coverage_ppf
from covcal.errors import DomainError, InfeasibleGuaranteeError
from covcal.quantiles import snap_real
from covcal.special import reg_inc_beta

__all__ = [
    "SolveResult",
    "PlanResult",
    "solve_level",
    "c_min_of",
    "min_calibration_size",
    "g_bounds",
    "PLAN_N_CAP",
]

# Bisection tolerance on the continuous order index.
_M_BAR_TOL = 1e-9
# Lower edge of the bracket when the root drops below 1 (lax targets).
_M_BAR_FLOOR = 1e-9
# Planner search cap; beyond this the target is reported unreachable.
PLAN_N_CAP = 10**7


@dataclass(frozen=True)
class SolveResult:
    """Outcome of solve_level: integer index m = ceil(m_bar), the
    continuous root m_bar, the corrected level q_tilde = m/n_cal, and the
    confidence P(C >= c_min) actually achieved (>= 1 - alpha)."""

    m: int
    m_bar: float
    q_tilde: float
    achieved_confidence: float


@dataclass(frozen=True)
class PlanResult:
    """Calibration-size bracket: no n < n_inf can reach the target at the
    requested level, every n > n_sup does."""

    n_inf: int
    n_sup: int


def _validate_levels(c_min: float, alpha: float) -> None:
    if not (0.0 < c_min < 1.0):
        raise DomainError(f"c_min must lie in (0, 1), got {c_min}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def solve_level(n_cal: int, c_min: float, alpha: float) -> SolveResult:
    """Smallest m <= n_cal with P(C >= c_min) >= 1 - alpha.

    Equivalently the smallest m with F_C(c_min; m, n_cal) <= alpha.  The
    root of the continuous relaxation is found by bracketed bisection
    (g is monotone in m_bar, so this always converges), then the integer
    index is its ceiling, verified and minimal by construction.

    Raises
    ------
    InfeasibleGuaranteeError
        When even m = n_cal leaves more than alpha below c_min; the
        remedy is a larger calibration set (see min_calibration_size).
    """
    if n_cal < 1:
        raise DomainError(f"n_cal must be >= 1, got {n_cal}")
    _validate_levels(c_min, alpha)

    def g(m_bar: float) -> float:
        return reg_inc_beta(c_min, m_bar, n_cal - m_bar + 1.0) - alpha

    g_top = g(float(n_cal))  # Beta(n, 1): CDF = c_min**n
    if g_top > 0.0:
        raise InfeasibleGuaranteeError(
            f"P(C >= {c_min}) >= {1 - alpha} is unreachable with n_cal={n_cal} "
            f"(best survival {1 - c_min ** n_cal:.6f} at m = n_cal); "
            f"plan a larger calibration set",
            n_cal=n_cal,
        )
    if n_cal == 1 or g(1.0) <= 0.0:
        lo, hi = _M_BAR_FLOOR, 1.0  # root at or below 1; g(0+) = 1 - alpha > 0
    else:
        lo, hi = 1.0, float(n_cal)
    while hi - lo > _M_BAR_TOL:
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    m_bar = hi

    # Integer index: ceiling of the root, then an exactness sweep so that
    # bisection slop around integer-valued roots cannot cost minimality.
    m = max(1, min(n_cal, math.ceil(snap_real(m_bar))))
    while m > 1 and g(float(m - 1)) <= 0.0:
        m -= 1
    while g(float(m)) > 0.0:
        m += 1  # cannot pass n_cal: g(n_cal) <= 0 was checked above
    if math.ceil(m_bar) != m:
        m_bar = float(m)  # snap within bisection tolerance of the root

    achieved = 1.0 - coverage_cdf(CoverageLaw(m, n_cal), c_min)
    return SolveResult(m=m, m_bar=m_bar, q_tilde=m / n_cal, achieved_confidence=achieved)


def c_min_of(n_cal: int, m: int, alpha: float) -> float:
    """Coverage floor of an existing m-of-n_cal predictor at confidence
    1 - alpha: the alpha-quantile of its coverage law.

    The returned floor is *certified*: P(C >= floor) >= 1 - alpha holds
    under the law, so feeding it back into solve_level never asks for
    more than m.  The inverse's residual tolerance can land a hair on the
    uncertified side, so the result is shaved down until F(floor) <= alpha.
    """
    if n_cal < 1:
        raise DomainError(f"n_cal must be >= 1, got {n_cal}")
    if not 1 <= m <= n_cal:
        raise DomainError(f"m must lie in 1..{n_cal}, got {m}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    law = CoverageLaw(m, n_cal)
    floor = coverage_ppf(law, alpha)
    step = max(1e-15, floor * 1e-15)
    while floor > 0.0 and coverage_cdf(law, floor) > alpha:
        floor -= step
        step *= 4.0
    return max(floor, 0.0)


def g_bounds(n_cal: int, q_tilde: float, c_min: float, alpha: float) -> tuple[float, float]:
    """Sandwich of the integer-index curve g(m(n_cal)) at m_bar = n_cal * q_tilde.

    Because the coverage CDF increases in its second Beta parameter and
    decreases in its first, replacing the integer m = ceil(m_bar) by the
    real m_bar bounds the CDF from above (law Beta(m_bar, n-m_bar+1)),
    and shifting one unit, Beta(m_bar+1, n-m_bar), bounds it from below.
    Returns both bounds minus alpha, so:

        g_lower <= g(m(n_cal)) <= g_upper.
    """
    if n_cal < 1:
        raise DomainError(f"n_cal must be >= 1, got {n_cal}")
    _validate_levels(c_min, alpha)
    if not (0.0 < q_tilde <= 1.0):
        raise DomainError(f"q_tilde must lie in (0, 1], got {q_tilde}")
    m_bar = snap_real(n_cal * q_tilde)
    b_upper = n_cal - m_bar + 1.0
    g_upper = reg_inc_beta(c_min, m_bar, b_upper) - alpha
    b_lower = n_cal - m_bar
    if b_lower <= 0.0:
        # q_tilde = 1: the lower law degenerates to a point mass at 1
        g_lower = -alpha
    else:
        g_lower = reg_inc_beta(c_min, m_bar + 1.0, b_lower) - alpha
    return g_lower, g_upper


def _first_n_at_or_below(curve, cap: int, what: str) -> int:
    """Smallest integer n >= 1 with curve(n) <= 0.

    Geometric expansion to bracket the sign change, then integer
    bisection.  The bound curves decrease in n throughout the reachable
    regime (q_tilde > c_min), which is what makes the bisection valid.
    """
    if curve(1) <= 0.0:
        return 1
    lo, hi = 1, 2
    while curve(hi) > 0.0:
        lo = hi
        hi *= 2
        if hi >= cap:
            if curve(cap) > 0.0:
                raise InfeasibleGuaranteeError(
                    f"{what} stays above the confidence target for every "
                    f"n_cal up to the search cap {cap}; the requested "
                    f"(c_min, q_tilde, alpha) combination is unreachable"
                )
            hi = cap
            break
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if curve(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def min_calibration_size(c_min: float, q_tilde: float, alpha: float,
                         slack: float | None = None, *,
                         cap: int = PLAN_N_CAP) -> PlanResult:
    """Bracket the minimum calibration size for a target (c_min, alpha)
    at quantile level q_tilde.

    Order statistics only realize levels m/n, so the level is honoured up
    to ``slack`` (default: half an order-statistic step, 0.5/n_cal); the
    bracket itself comes from the two continuous bound curves of
    :func:`g_bounds` evaluated along m_bar = n * q_tilde, and is valid
    for any slack up to one full step 1/n_cal:

    * n_inf - root of the lower curve; below it no in-slack model reaches
      the target;
    * n_sup - root of the upper curve; above it the model m = ceil(n *
      q_tilde) always reaches the target.
    """
    _validate_levels(c_min, alpha)
    if not (0.0 < q_tilde < 1.0):
        raise DomainError(f"q_tilde must lie in (0, 1), got {q_tilde}")
    if slack is not None and not slack > 0.0:
        raise DomainError(f"slack must be positive, got {slack}")

    def upper(n: int) -> float:
        return g_bounds(n, q_tilde, c_min, alpha)[1]

    def lower(n: int) -> float:
        return g_bounds(n, q_tilde, c_min, alpha)[0]

    n_inf = _first_n_at_or_below(lower, cap, "the optimistic coverage bound")
    n_sup = _first_n_at_or_below(upper, cap, "the conservative coverage bound")
    return PlanResult(n_inf=n_inf, n_sup=n_sup)
