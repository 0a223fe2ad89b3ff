"""Split conformal calibration.

Takes a calibration set of (y_true, y_pred, u) triples, where u is the
half-width proposed by any heuristic uncertainty model (0 for none),
reduces it to conformity scores s_i = |y_true_i - y_pred_i| - u_i, and
picks the order statistic of those scores that certifies the requested
guarantee:

* ``ClassicGuarantee(c_nom)`` - marginal coverage at least c_nom, using
  the corrected level q* = ceil((n+1) c_nom) / n;
* ``SmallSampleGuarantee(c_min, alpha)`` - coverage of this one predictor
  at least c_min with confidence 1 - alpha, using the level solved by
  :func:`covcal.small_sample.solve_level`.

The calibrated correction Q is added to the heuristic half-width, so the
interval for a fresh prediction is [y_pred - u - Q, y_pred + u + Q].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, NamedTuple, Sequence, Union

from covcal import small_sample
from covcal.coverage import as_exact_level
from covcal.errors import DomainError, InfeasibleGuaranteeError, MissingGroupError
from covcal.quantiles import ScoreSet

__all__ = [
    "CalibrationRecord",
    "ClassicGuarantee",
    "SmallSampleGuarantee",
    "GuaranteeSpec",
    "ConformalPredictor",
    "PredictionInterval",
    "scores",
    "classic_level",
    "resolve_order_index",
    "calibrate",
    "calibrate_grouped",
    "predict_interval",
]


@dataclass(frozen=True)
class ClassicGuarantee:
    """Marginal-coverage contract: E(C) in [c_nom, c_nom + 1/(n+1)]."""

    c_nom: float

    def __post_init__(self):
        if not (0.0 < self.c_nom < 1.0):
            raise DomainError(f"c_nom must lie in (0, 1), got {self.c_nom}")


@dataclass(frozen=True)
class SmallSampleGuarantee:
    """Single-predictor contract: P(C >= c_min) >= 1 - alpha."""

    c_min: float
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.c_min < 1.0):
            raise DomainError(f"c_min must lie in (0, 1), got {self.c_min}")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")


GuaranteeSpec = Union[ClassicGuarantee, SmallSampleGuarantee]


@dataclass(frozen=True)
class CalibrationRecord:
    y_true: float
    y_pred: float
    u_heuristic: float = 0.0
    group: Hashable | None = None

    def __post_init__(self):
        for name in ("y_true", "y_pred", "u_heuristic"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
        if self.u_heuristic < 0.0:
            raise DomainError(f"u_heuristic must be >= 0, got {self.u_heuristic}")

    @property
    def score(self) -> float:
        return abs(self.y_true - self.y_pred) - self.u_heuristic


@dataclass(frozen=True)
class ConformalPredictor:
    """The calibrated artifact.

    When the requested level is infeasible for the sample size, the
    predictor is flagged ``unbounded``: m, quantile_level and correction
    are None and its intervals are the whole real line.
    """

    n_cal: int
    guarantee: GuaranteeSpec
    m: int | None
    quantile_level: float | None
    correction: float | None
    group: Hashable | None = None
    unbounded: bool = False


class PredictionInterval(NamedTuple):
    lo: float
    hi: float
    clamped: bool = False


def scores(records: Sequence[CalibrationRecord]) -> ScoreSet:
    """Conformity scores |y_true - y_pred| - u of a calibration set."""
    if len(records) == 0:
        raise DomainError("cannot compute scores of an empty calibration set")
    return ScoreSet([r.score for r in records])


def classic_level(n_cal: int, c_nom: float | Fraction) -> Fraction:
    """Corrected quantile level q* = ceil((n_cal+1) * c_nom) / n_cal.

    Exact rational output in (0, 1].  Raises InfeasibleGuaranteeError when
    the required order statistic exceeds the sample size.
    """
    if n_cal < 1:
        raise DomainError(f"n_cal must be >= 1, got {n_cal}")
    c = as_exact_level(c_nom)
    if not Fraction(0) < c < Fraction(1):
        raise DomainError(f"c_nom must lie in (0, 1), got {c}")
    m = math.ceil((n_cal + 1) * c)
    if m > n_cal:
        raise InfeasibleGuaranteeError(
            f"classic level needs order statistic {m} of {n_cal} scores; "
            f"no sample quantile can certify c_nom={float(c)} at this size",
            n_cal=n_cal, required_m=m,
        )
    return Fraction(m, n_cal)


def resolve_order_index(n_cal: int, spec: GuaranteeSpec) -> int:
    """Order index m certifying the guarantee on n_cal scores."""
    if isinstance(spec, ClassicGuarantee):
        q_star = classic_level(n_cal, spec.c_nom)
        return int(q_star * n_cal)  # q* = m/n exactly, so this recovers m
    if isinstance(spec, SmallSampleGuarantee):
        return small_sample.solve_level(n_cal, spec.c_min, spec.alpha).m
    raise DomainError(f"unknown guarantee spec: {spec!r}")


def calibrate(records: Sequence[CalibrationRecord], spec: GuaranteeSpec,
              *, group: Hashable | None = None,
              allow_unbounded: bool = True) -> ConformalPredictor:
    """Calibrate a conformal predictor on a set of records.

    The correction is the m-th smallest conformity score, where m comes
    from the guarantee.  Infeasible levels yield an unbounded predictor
    (or re-raise when ``allow_unbounded`` is False); there is no silent
    fallback to the maximum score, which would void the guarantee.

    Records must share a single group label (or carry none); mixed labels
    need calibrate_grouped.
    """
    labels = {r.group for r in records}
    if len(labels) > 1:
        raise DomainError(
            f"records carry {len(labels)} distinct group labels; pool them "
            f"explicitly or use calibrate_grouped"
        )
    if group is None and labels:
        group = next(iter(labels))
    score_set = scores(records)
    n_cal = len(score_set)
    try:
        m = resolve_order_index(n_cal, spec)
    except InfeasibleGuaranteeError:
        if not allow_unbounded:
            raise
        return ConformalPredictor(
            n_cal=n_cal, guarantee=spec, m=None, quantile_level=None,
            correction=None, group=group, unbounded=True,
        )
    return ConformalPredictor(
        n_cal=n_cal,
        guarantee=spec,
        m=m,
        quantile_level=m / n_cal,
        correction=score_set.order_statistic(m),
        group=group,
    )


def calibrate_grouped(records: Sequence[CalibrationRecord], spec: GuaranteeSpec,
                      *, expected_groups: Iterable[Hashable] | None = None,
                      allow_unbounded: bool = True) -> dict[Hashable, ConformalPredictor]:
    """Independent calibration per group label (group-balanced mode).

    Every record must carry a group label.  If ``expected_groups`` is
    given, groups without records raise MissingGroupError instead of
    disappearing from the output.
    """
    if len(records) == 0:
        raise DomainError("cannot calibrate on an empty calibration set")
    partition: dict[Hashable, list[CalibrationRecord]] = {}
    for i, rec in enumerate(records):
        if rec.group is None:
            raise DomainError(f"record {i} has no group label; grouped calibration needs one on every record")
        partition.setdefault(rec.group, []).append(rec)
    if expected_groups is not None:
        missing = [g for g in expected_groups if g not in partition]
        if missing:
            raise MissingGroupError(missing)
    return {
        g: calibrate(rows, spec, group=g, allow_unbounded=allow_unbounded)
        for g, rows in partition.items()
    }


def predict_interval(p: ConformalPredictor, y_pred: float,
                     u_heuristic: float = 0.0) -> PredictionInterval:
    """Prediction interval [y_pred - u - Q, y_pred + u + Q].

    An unbounded predictor returns the whole real line.  A negative total
    half-width u + Q (possible when the heuristic over-covers) is clamped
    to zero and the interval flagged, so the output is always a valid
    closed interval.
    """
    if not math.isfinite(y_pred):
        raise DomainError(f"y_pred must be finite, got {y_pred}")
    if not (math.isfinite(u_heuristic) and u_heuristic >= 0.0):
        raise DomainError(f"u_heuristic must be finite and >= 0, got {u_heuristic}")
    if p.unbounded:
        return PredictionInterval(-math.inf, math.inf)
    half_width = u_heuristic + p.correction
    if half_width < 0.0:
        return PredictionInterval(y_pred, y_pred, clamped=True)
    return PredictionInterval(y_pred - half_width, y_pred + half_width)
