"""Post-hoc coverage verification on a finite test set.

Counting hits on a test set estimates the true coverage of a predictor,
but the estimate carries binomial noise.  Because coverages of interest
sit near one, the normal approximation is unreliable there, so the
confidence interval is the exact (conservative) Clopper-Pearson one,
computed from Beta quantiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

from covcal.errors import DomainError
from covcal.special import inv_reg_inc_beta

__all__ = ["CoverageAudit", "count_hits", "clopper_pearson", "audit_intervals"]


@dataclass(frozen=True)
class CoverageAudit:
    hits: int
    n_test: int
    point_estimate: float
    ci_low: float
    ci_high: float
    confidence: float

    def __post_init__(self):
        if not 0 <= self.hits <= self.n_test:
            raise DomainError(f"hits must lie in 0..{self.n_test}, got {self.hits}")
        if not self.ci_low <= self.point_estimate <= self.ci_high:
            raise DomainError("confidence interval must contain the point estimate")


def count_hits(records: Sequence[Tuple[float, Tuple[float, float]]]) -> tuple[int, int]:
    """Count test points inside their intervals (closed membership).

    ``records`` is a sequence of (y_true, (lo, hi)) pairs.  Returns
    (hits, n_test).
    """
    if len(records) == 0:
        raise DomainError("cannot audit an empty test set")
    hits = 0
    for i, (y_true, interval) in enumerate(records):
        lo, hi = interval[0], interval[1]  # tolerate flagged interval tuples
        if math.isnan(y_true) or math.isnan(lo) or math.isnan(hi):
            raise DomainError(f"record {i} contains NaN")
        if lo > hi:
            raise DomainError(f"record {i} has an inverted interval [{lo}, {hi}]")
        if lo <= y_true <= hi:
            hits += 1
    return hits, len(records)


def clopper_pearson(hits: int, n_test: int, confidence: float) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval for a proportion.

    The bounds are Beta quantiles:

        ci_low  = Q_Beta(hits,   n-hits+1; (1-confidence)/2)   (0 when hits = 0)
        ci_high = Q_Beta(hits+1, n-hits;   1-(1-confidence)/2) (1 when hits = n)

    Conservative by construction: its coverage of the true proportion is
    at least ``confidence`` for every sample size.
    """
    if n_test < 1:
        raise DomainError(f"n_test must be >= 1, got {n_test}")
    if not 0 <= hits <= n_test:
        raise DomainError(f"hits must lie in 0..{n_test}, got {hits}")
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must lie in (0, 1), got {confidence}")
    tail = (1.0 - confidence) / 2.0
    ci_low = 0.0 if hits == 0 else inv_reg_inc_beta(tail, hits, n_test - hits + 1)
    ci_high = 1.0 if hits == n_test else inv_reg_inc_beta(1.0 - tail, hits + 1, n_test - hits)
    return ci_low, ci_high


def audit_intervals(records: Sequence[Tuple[float, Tuple[float, float]]],
                    confidence: float = 0.95) -> CoverageAudit:
    """Hit count plus Clopper-Pearson interval in one CoverageAudit."""
    hits, n_test = count_hits(records)
    ci_low, ci_high = clopper_pearson(hits, n_test, confidence)
    return CoverageAudit(
        hits=hits, n_test=n_test, point_estimate=hits / n_test,
        ci_low=ci_low, ci_high=ci_high, confidence=confidence,
    )
