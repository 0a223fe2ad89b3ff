"""covcal: coverage calibration for conformal prediction intervals.

Calibrates uncertainty models under either the classic marginal-coverage
guarantee or a small-sample guarantee on the coverage of a single
predictor, plans minimum calibration-set sizes, audits achieved coverage
with exact binomial intervals, and validates the analytic coverage law by
Monte Carlo.
"""

from covcal.audit import CoverageAudit, audit_intervals, clopper_pearson, count_hits
from covcal.conformal import (
    CalibrationRecord,
    ClassicGuarantee,
    ConformalPredictor,
    GuaranteeSpec,
    PredictionInterval,
    SmallSampleGuarantee,
    calibrate,
    calibrate_grouped,
    classic_level,
    predict_interval,
    resolve_order_index,
    scores,
)
from covcal.coverage import (
    CoverageLaw,
    coverage_cdf,
    coverage_ppf,
    expected_coverage,
    marginal_gap_classic,
    marginal_gap_simple,
)
from covcal.errors import (
    ConvergenceError,
    CovcalError,
    DomainError,
    InfeasibleGuaranteeError,
    MissingGroupError,
)
from covcal.harness import (
    CoverageSample,
    ExperimentConfig,
    compare_to_law,
    folded_normal_cdf,
    histogram,
    run_experiment,
)
from covcal.quantiles import ScoreSet, order_index, sample_quantile
from covcal.small_sample import (
    PlanResult,
    SolveResult,
    c_min_of,
    g_bounds,
    min_calibration_size,
    solve_level,
)
from covcal.special import Tolerance, erf, inv_reg_inc_beta, log_gamma, reg_inc_beta

__version__ = "0.1.0"

__all__ = [
    "CalibrationRecord",
    "ClassicGuarantee",
    "ConformalPredictor",
    "ConvergenceError",
    "CovcalError",
    "CoverageAudit",
    "CoverageLaw",
    "CoverageSample",
    "DomainError",
    "ExperimentConfig",
    "GuaranteeSpec",
    "InfeasibleGuaranteeError",
    "MissingGroupError",
    "PlanResult",
    "PredictionInterval",
    "ScoreSet",
    "SmallSampleGuarantee",
    "SolveResult",
    "Tolerance",
    "audit_intervals",
    "calibrate",
    "calibrate_grouped",
    "classic_level",
    "clopper_pearson",
    "compare_to_law",
    "count_hits",
    "coverage_cdf",
    "coverage_ppf",
    "c_min_of",
    "erf",
    "expected_coverage",
    "folded_normal_cdf",
    "g_bounds",
    "histogram",
    "inv_reg_inc_beta",
    "log_gamma",
    "marginal_gap_classic",
    "marginal_gap_simple",
    "min_calibration_size",
    "order_index",
    "predict_interval",
    "reg_inc_beta",
    "resolve_order_index",
    "run_experiment",
    "sample_quantile",
    "scores",
    "solve_level",
]
