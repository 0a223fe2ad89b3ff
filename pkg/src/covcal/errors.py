"""Semantic exception hierarchy shared by all covcal modules."""

from __future__ import annotations


class CovcalError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CovcalError, ValueError):
    """An input lies outside the documented domain of an operation."""


class ConvergenceError(CovcalError, RuntimeError):
    """An iterative solver exhausted its iteration budget.

    Raised instead of silently returning the last iterate.
    """


class InfeasibleGuaranteeError(CovcalError):
    """The requested reliability target cannot be met.

    Either the corrected quantile level would require an order statistic
    beyond the sample size, or no calibration size up to the search cap
    reaches the target.  Callers may treat this as "use an unbounded
    predictor" or "collect more data" depending on context.
    """

    def __init__(self, message: str, *, n_cal: int | None = None,
                 required_m: int | None = None):
        super().__init__(message)
        self.n_cal = n_cal
        self.required_m = required_m


class MissingGroupError(CovcalError, ValueError):
    """A group expected during grouped calibration has no records."""

    def __init__(self, missing: list):
        super().__init__(f"groups with no calibration records: {sorted(map(str, missing))}")
        self.missing = list(missing)
