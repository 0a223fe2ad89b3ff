"""The coverage law of an order-statistic predictor and its closed-form
consequences.

When a prediction interval is built from the m-th smallest of n_cal
calibration scores, its coverage on fresh data is a random variable with
distribution Beta(m, n_cal - m + 1) across draws of the calibration set.
This module exposes that distribution (CDF, quantile function, mean) plus
the two exact marginal-coverage gap formulas used by the guarantees: the
uncorrected level q = c_nom, and the corrected classic level
q* = ceil((n_cal+1) * c_nom) / n_cal.

The gap formulas hinge on whether n*c (resp. (n+1)*c) is an integer, a
case split that is brittle in floating point, so they run on exact
rational arithmetic: Fraction inputs are used as-is, floats are snapped
to the nearest fraction with denominator <= 1e9 (the same tolerance as
the guarded ceiling in :mod:`covcal.quantiles`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from covcal.errors import DomainError, InfeasibleGuaranteeError
from covcal.special import Tolerance, inv_reg_inc_beta, reg_inc_beta

__all__ = [
    "CoverageLaw",
    "coverage_cdf",
    "coverage_ppf",
    "expected_coverage",
    "marginal_gap_simple",
    "marginal_gap_classic",
]

_SNAP_DENOMINATOR = 10**9

RealLevel = Union[float, Fraction]


def as_exact_level(c: RealLevel) -> Fraction:
    """Exact rational view of a nominal level.

    Fractions pass through unchanged; floats are snapped to the nearest
    rational with denominator <= 1e9, so 0.905 means 181/200 rather than
    its binary representation.
    """
    if isinstance(c, Fraction):
        return c
    if not (math.isfinite(c)):
        raise DomainError(f"level must be finite, got {c}")
    return Fraction(c).limit_denominator(_SNAP_DENOMINATOR)


@dataclass(frozen=True)
class CoverageLaw:
    """Beta(m, n_cal - m + 1) coverage distribution.

    m may be an integer order index or a positive real (the continuous
    relaxation used by the solvers); both share this one type.
    """

    m: float
    n_cal: int

    def __post_init__(self):
        if self.n_cal < 1:
            raise DomainError(f"n_cal must be >= 1, got {self.n_cal}")
        if not (0.0 < self.m <= self.n_cal):
            raise DomainError(f"order index must lie in (0, n_cal], got m={self.m}, n_cal={self.n_cal}")

    @property
    def alpha_param(self) -> float:
        return float(self.m)

    @property
    def beta_param(self) -> float:
        return float(self.n_cal - self.m + 1)


def coverage_cdf(law: CoverageLaw, c: float) -> float:
    """P(C <= c) under the law: I_c(m, n_cal - m + 1)."""
    if not (0.0 <= c <= 1.0):
        raise DomainError(f"coverage must lie in [0, 1], got {c}")
    return reg_inc_beta(c, law.alpha_param, law.beta_param)


def coverage_ppf(law: CoverageLaw, p: float, tol: Tolerance = Tolerance()) -> float:
    """Quantile function of the law: the coverage c with P(C <= c) = p."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    return inv_reg_inc_beta(p, law.alpha_param, law.beta_param, tol)


def expected_coverage(law: CoverageLaw) -> float:
    """Mean coverage m / (n_cal + 1)."""
    return law.m / (law.n_cal + 1)


def marginal_gap_simple(n_cal: int, c_nom: RealLevel) -> Fraction:
    """Exact marginal-coverage gap E(C) - c_nom at the uncorrected level.

    Uses m = ceil(n_cal * c_nom); the result is always inside
    [-1/(n_cal+1), 1/(n_cal+1)].  Returned as an exact Fraction.
    """
    if n_cal < 1:
        raise DomainError(f"n_cal must be >= 1, got {n_cal}")
    c = as_exact_level(c_nom)
    if not Fraction(0) < c < Fraction(1):
        raise DomainError(f"nominal level must lie in (0, 1), got {c}")
    m = math.ceil(n_cal * c)
    return Fraction(m, n_cal + 1) - c


def marginal_gap_classic(n_cal: int, c_nom: RealLevel) -> Fraction:
    """Exact marginal-coverage gap E(C) - c_nom at the corrected level.

    Uses m = ceil((n_cal+1) * c_nom), which keeps the gap inside
    [0, 1/(n_cal+1)] (zero exactly when (n_cal+1)*c_nom is an integer).

    Raises
    ------
    InfeasibleGuaranteeError
        When m would exceed n_cal, i.e. no order statistic of the sample
        can deliver the corrected level.
    """
    if n_cal < 1:
        raise DomainError(f"n_cal must be >= 1, got {n_cal}")
    c = as_exact_level(c_nom)
    if not Fraction(0) < c < Fraction(1):
        raise DomainError(f"nominal level must lie in (0, 1), got {c}")
    m = math.ceil((n_cal + 1) * c)
    if m > n_cal:
        raise InfeasibleGuaranteeError(
            f"corrected level requires order statistic {m} of {n_cal} scores",
            n_cal=n_cal, required_m=m,
        )
    return Fraction(m, n_cal + 1) - c
