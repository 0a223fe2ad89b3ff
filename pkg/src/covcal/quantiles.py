"""Order-statistic sample quantiles.

The estimator is the plain order statistic: the quantile of a sample of
size n at level q is its ceil(n*q)-th smallest value.  Every calibration
path in the package goes through this single definition, so the ceiling
is guarded against floating-point products that land a hair below an
integer (levels are ratios of integers like m/n and must reproduce m
exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from covcal.errors import DomainError

__all__ = ["ScoreSet", "order_index", "sample_quantile",
           "guarded_product_ceil", "snap_real"]

# Relative slack when deciding whether n*q is "really" an integer before
# the ceiling is applied.
_CEIL_GUARD_REL_EPS = 1e-9

LevelLike = Union[float, Fraction]


def guarded_product_ceil(n: int, q: float) -> int:
    """ceil(n*q) with the product snapped to the nearest integer when it
    is within 1e-9 relative of one."""
    t = n * q
    nearest = round(t)
    if abs(t - nearest) <= _CEIL_GUARD_REL_EPS * max(1.0, abs(t)):
        return int(nearest)
    return math.ceil(t)


def snap_real(x: float) -> float:
    """Snap x to the nearest integer when within 1e-9 relative of one."""
    nearest = round(x)
    if abs(x - nearest) <= _CEIL_GUARD_REL_EPS * max(1.0, abs(x)):
        return float(nearest)
    return x


@dataclass
class ScoreSet:
    """A finite sample of conformity scores.

    Scores must be finite and the set non-empty; when ``sorted_flag`` is
    set the entries are trusted (and verified) to be non-decreasing.  The
    sorted copy is computed once and reused.
    """

    scores: Sequence[float] | np.ndarray
    sorted_flag: bool = False
    _sorted: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("ScoreSet requires a non-empty 1-d sample")
        if not np.isfinite(arr).all():
            raise DomainError("ScoreSet entries must all be finite")
        if self.sorted_flag:
            if np.any(np.diff(arr) < 0):
                raise DomainError("sorted_flag set but scores are not non-decreasing")
            self._sorted = arr
        self.scores = arr

    def __len__(self) -> int:
        return int(self.scores.size)

    def sorted_scores(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.scores)
        return self._sorted

    def order_statistic(self, m: int) -> float:
        """The m-th smallest score, 1-indexed."""
        if not 1 <= m <= len(self):
            raise DomainError(f"order statistic index {m} outside 1..{len(self)}")
        return float(self.sorted_scores()[m - 1])


def order_index(n: int, q: LevelLike) -> int:
    """Return m = ceil(n*q), the order-statistic index for quantile level q.

    Accepts q as a float (ceiling guarded, see module docstring) or as a
    Fraction (evaluated exactly).  Always lands in 1..n.
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    if isinstance(q, Fraction):
        if not Fraction(0) < q < Fraction(1):
            raise DomainError(f"quantile level must lie in (0, 1), got {q}")
        m = math.ceil(n * q)
    else:
        if not (math.isfinite(q) and 0.0 < q < 1.0):
            raise DomainError(f"quantile level must lie in (0, 1), got {q}")
        m = guarded_product_ceil(n, q)
    return min(max(m, 1), n)


def sample_quantile(s: ScoreSet, q: LevelLike) -> float:
    """Sample quantile of s at level q: the order_index(len(s), q)-th
    smallest score.  Deterministic under duplicates."""
    return s.order_statistic(order_index(len(s), q))
