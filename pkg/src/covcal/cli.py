"""Command-line front end.

Subcommands:

* ``calibrate`` - conformalize a CSV of calibration records
* ``plan-n``    - bracket the minimum calibration size for a target
* ``cmin``      - coverage floor of an existing predictor
* ``audit``     - hit count + Clopper-Pearson interval on a test CSV
* ``simulate``  - Monte Carlo validation of the coverage distribution

Output is aligned human-readable text by default, or deterministic
JSON-lines with ``--json`` (one envelope object per line, stable key
order).  Exit codes: 0 success, 1 input error, 2 guarantee infeasible.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from typing import Any

from covcal.audit import audit_intervals
from covcal.conformal import (
    CalibrationRecord,
    ClassicGuarantee,
    ConformalPredictor,
    GuaranteeSpec,
    SmallSampleGuarantee,
    calibrate,
    calibrate_grouped,
    resolve_order_index,
)
from covcal.coverage import CoverageLaw
from covcal.errors import CovcalError, InfeasibleGuaranteeError
from covcal.harness import CoverageSample, ExperimentConfig, compare_to_law, histogram, run_experiment
from covcal.small_sample import c_min_of, min_calibration_size, solve_level

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2

_SMALL_SAMPLE_NOTE = (
    "small-sample guarantee certifies P(coverage >= c_min) >= 1 - alpha for "
    "this single predictor; it does not pin the marginal coverage"
)


class InputError(Exception):
    """Bad file contents or bad flag combination; maps to exit code 1."""


@dataclass
class ReportEnvelope:
    command: str
    inputs_echo: dict[str, Any]
    results: dict[str, Any]
    warnings: list[str] = field(default_factory=list)

    def to_json_line(self) -> str:
        payload = {
            "command": self.command,
            "inputs": self.inputs_echo,
            "results": self.results,
            "warnings": self.warnings,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        for section, mapping in (("inputs", self.inputs_echo), ("results", self.results)):
            lines.append(f"{section}:")
            width = max((len(str(k)) for k in mapping), default=0)
            for k, v in mapping.items():
                if k == "histogram":
                    lines.append(f"  {k} (bin_low,bin_high,count):")
                    for lo, hi, count in v:
                        lines.append(f"    {lo},{hi},{count}")
                else:
                    lines.append(f"  {str(k):<{width}}  {v}")
        if self.warnings:
            lines.append("warnings:")
            for w in self.warnings:
                lines.append(f"  - {w}")
        return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for
    # infeasible guarantees here, so remap usage problems to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def _add_guarantee_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c-nom", type=float, default=None,
                   help="nominal marginal coverage (classic guarantee)")
    p.add_argument("--c-min", type=float, default=None,
                   help="minimum acceptable coverage (small-sample guarantee)")
    p.add_argument("--alpha", type=float, default=None,
                   help="tail probability; confidence is 1 - alpha")


def _guarantee_from_args(args: argparse.Namespace) -> GuaranteeSpec:
    classic = args.c_nom is not None
    small = args.c_min is not None or args.alpha is not None
    if classic and small:
        raise InputError("--c-nom is mutually exclusive with --c-min/--alpha")
    if classic:
        return ClassicGuarantee(c_nom=args.c_nom)
    if args.c_min is None or args.alpha is None:
        raise InputError("provide either --c-nom, or both --c-min and --alpha")
    return SmallSampleGuarantee(c_min=args.c_min, alpha=args.alpha)


def _guarantee_echo(spec: GuaranteeSpec) -> dict[str, Any]:
    if isinstance(spec, ClassicGuarantee):
        return {"kind": "classic", "c_nom": spec.c_nom}
    return {"kind": "small_sample", "c_min": spec.c_min, "alpha": spec.alpha}


def _parse_float(raw: str | None, row: int, column: str) -> float:
    try:
        return float(raw)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise InputError(
            f"row {row}, column {column!r}: could not parse {raw!r} as a number"
        ) from None


def _read_calibration_csv(path: str, grouped: bool) -> list[CalibrationRecord]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot open {path}: {e}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file, expected header y_true,y_pred[,u][,group]")
        fields = [f.strip() for f in reader.fieldnames]
        for required in ("y_true", "y_pred"):
            if required not in fields:
                raise InputError(f"{path}: missing required column {required!r} in header {fields}")
        if grouped and "group" not in fields:
            raise InputError(f"{path}: --grouped requires a 'group' column")
        records = []
        for row_no, row in enumerate(reader, start=2):  # header is line 1
            y_true = _parse_float(row["y_true"], row_no, "y_true")
            y_pred = _parse_float(row["y_pred"], row_no, "y_pred")
            u_raw = (row.get("u") or "").strip()
            u = _parse_float(u_raw, row_no, "u") if u_raw else 0.0
            group = (row.get("group") or "").strip() or None
            try:
                records.append(CalibrationRecord(y_true=y_true, y_pred=y_pred,
                                                 u_heuristic=u, group=group))
            except CovcalError as e:
                raise InputError(f"row {row_no}: {e}") from None
    if not records:
        raise InputError(f"{path}: no data rows")
    return records


def _read_audit_csv(path: str) -> list[tuple[float, tuple[float, float]]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot open {path}: {e}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file, expected header y_true,lo,hi")
        fields = [f.strip() for f in reader.fieldnames]
        for required in ("y_true", "lo", "hi"):
            if required not in fields:
                raise InputError(f"{path}: missing required column {required!r} in header {fields}")
        rows = []
        for row_no, row in enumerate(reader, start=2):
            y = _parse_float(row["y_true"], row_no, "y_true")
            lo = _parse_float(row["lo"], row_no, "lo")
            hi = _parse_float(row["hi"], row_no, "hi")
            if lo > hi:
                raise InputError(f"row {row_no}: interval bounds inverted ({lo} > {hi})")
            rows.append((y, (lo, hi)))
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def _predictor_results(p: ConformalPredictor) -> dict[str, Any]:
    return {
        "n_cal": p.n_cal,
        "m": p.m,
        "quantile_level": p.quantile_level,
        "correction": p.correction,
        "unbounded": p.unbounded,
        "group": None if p.group is None else str(p.group),
        "guarantee": _guarantee_echo(p.guarantee),
    }


def _predictor_warnings(p: ConformalPredictor) -> list[str]:
    warnings = []
    if p.unbounded:
        warnings.append(
            "requested level is infeasible for this sample size: predictor is "
            "unbounded (intervals cover the whole output space)"
        )
    elif p.correction is not None and p.correction < 0.0:
        warnings.append(
            "negative correction: the heuristic over-covers; intervals shrink "
            "and are clamped at zero width when u + correction < 0"
        )
    if isinstance(p.guarantee, SmallSampleGuarantee):
        warnings.append(_SMALL_SAMPLE_NOTE)
    return warnings


def cmd_calibrate(args: argparse.Namespace) -> tuple[list[ReportEnvelope], int]:
    spec = _guarantee_from_args(args)
    records = _read_calibration_csv(args.input, grouped=args.grouped)
    echo = {"input": args.input, "grouped": args.grouped, "guarantee": _guarantee_echo(spec)}
    if args.grouped:
        predictors = calibrate_grouped(records, spec)
        ordered = sorted(predictors.items(), key=lambda kv: str(kv[0]))
        envelopes = [
            ReportEnvelope("calibrate", dict(echo, group=str(g)),
                           _predictor_results(p), _predictor_warnings(p))
            for g, p in ordered
        ]
        code = EXIT_INFEASIBLE if any(p.unbounded for _, p in ordered) else EXIT_OK
    else:
        extra = []
        if len({r.group for r in records}) > 1:
            # pooled calibration deliberately ignores the group column
            records = [CalibrationRecord(r.y_true, r.y_pred, r.u_heuristic)
                       for r in records]
            extra.append("group column present but --grouped not set: "
                         "calibrated globally across groups")
        predictor = calibrate(records, spec)
        envelopes = [ReportEnvelope("calibrate", echo,
                                    _predictor_results(predictor),
                                    extra + _predictor_warnings(predictor))]
        code = EXIT_INFEASIBLE if predictor.unbounded else EXIT_OK
    return envelopes, code


def cmd_plan_n(args: argparse.Namespace) -> tuple[list[ReportEnvelope], int]:
    echo = {"c_min": args.c_min, "alpha": args.alpha, "q_tilde": args.q_tilde,
            "slack": args.slack}
    warnings = []
    if args.q_tilde <= args.c_min:
        warnings.append(
            "q_tilde does not exceed c_min: the required calibration size may "
            "be enormous or unreachable"
        )
    plan = min_calibration_size(args.c_min, args.q_tilde, args.alpha, args.slack)
    achieved = solve_level(plan.n_sup, args.c_min, args.alpha)
    results = {
        "n_inf": plan.n_inf,
        "n_sup": plan.n_sup,
        "achieved_m_at_n_sup": achieved.m,
        "achieved_q_tilde_at_n_sup": achieved.q_tilde,
        "achieved_confidence_at_n_sup": achieved.achieved_confidence,
    }
    return [ReportEnvelope("plan-n", echo, results, warnings)], EXIT_OK


def cmd_cmin(args: argparse.Namespace) -> tuple[list[ReportEnvelope], int]:
    if (args.m is None) == (args.c_nom is None):
        raise InputError("provide exactly one of --m or --c-nom")
    echo = {"n_cal": args.n_cal, "alpha": args.alpha, "m": args.m, "c_nom": args.c_nom}
    if args.m is not None:
        m = args.m
    else:
        m = resolve_order_index(args.n_cal, ClassicGuarantee(c_nom=args.c_nom))
    floor = c_min_of(args.n_cal, m, args.alpha)
    results = {"m": m, "quantile_level": m / args.n_cal, "c_min": floor,
               "confidence": 1.0 - args.alpha}
    return [ReportEnvelope("cmin", echo, results)], EXIT_OK


def cmd_audit(args: argparse.Namespace) -> tuple[list[ReportEnvelope], int]:
    rows = _read_audit_csv(args.input)
    report = audit_intervals(rows, confidence=args.confidence)
    echo = {"input": args.input, "confidence": args.confidence}
    results = {
        "hits": report.hits,
        "n_test": report.n_test,
        "point_estimate": report.point_estimate,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "confidence": report.confidence,
    }
    return [ReportEnvelope("audit", echo, results)], EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> tuple[list[ReportEnvelope], int]:
    spec = _guarantee_from_args(args)
    cfg = ExperimentConfig(n_cal=args.n_cal, n_mc=args.n_mc, guarantee=spec,
                           seed=args.seed)
    echo = {"n_cal": args.n_cal, "n_mc": args.n_mc, "seed": args.seed,
            "bins": args.bins, "guarantee": _guarantee_echo(spec)}
    warnings = []
    try:
        sample = run_experiment(cfg)
    except InfeasibleGuaranteeError as e:
        envelope = ReportEnvelope("simulate", echo, {}, [str(e)])
        return [envelope], EXIT_INFEASIBLE
    m = resolve_order_index(args.n_cal, spec)
    law = CoverageLaw(m=m, n_cal=args.n_cal)
    ks = compare_to_law(sample, law)
    results: dict[str, Any] = {
        "m": m,
        "quantile_level": m / args.n_cal,
        "mean_coverage": float(sample.coverages.mean()),
        "ks_distance_to_law": ks,
    }
    if isinstance(spec, ClassicGuarantee):
        results["frac_below_c_nom"] = float((sample.coverages < spec.c_nom).mean())
    else:
        results["frac_at_or_above_c_min"] = float((sample.coverages >= spec.c_min).mean())
        warnings.append(_SMALL_SAMPLE_NOTE)
    results["histogram"] = [list(row) for row in histogram(sample, args.bins)]
    return [ReportEnvelope("simulate", echo, results, warnings)], EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="covcal",
                     description="Coverage calibration, planning, auditing and "
                                 "Monte Carlo validation for conformal predictors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="conformalize a calibration CSV")
    p.add_argument("--input", required=True, help="CSV with header y_true,y_pred[,u][,group]")
    p.add_argument("--grouped", action="store_true", help="calibrate each group independently")
    _add_guarantee_flags(p)
    p.add_argument("--json", action="store_true", help="machine-readable JSON-lines output")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("plan-n", help="bracket the minimum calibration size")
    p.add_argument("--c-min", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--q-tilde", type=float, required=True,
                   help="desired corrected quantile level")
    p.add_argument("--slack", type=float, default=None,
                   help="tolerated deviation of m/n from q-tilde (default: 0.5/n)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_plan_n)

    p = sub.add_parser("cmin", help="coverage floor of an existing predictor")
    p.add_argument("--n-cal", type=int, required=True)
    p.add_argument("--m", type=int, default=None, help="order index of the predictor")
    p.add_argument("--c-nom", type=float, default=None,
                   help="infer m from the classic corrected level for this c_nom")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_cmin)

    p = sub.add_parser("audit", help="audit achieved coverage on a test CSV")
    p.add_argument("--input", required=True, help="CSV with header y_true,lo,hi")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_audit)

    p = sub.add_parser("simulate", help="Monte Carlo coverage experiment")
    p.add_argument("--n-cal", type=int, required=True)
    p.add_argument("--n-mc", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=30)
    _add_guarantee_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        envelopes, code = args.handler(args)
    except InputError as e:
        print(f"covcal: error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except InfeasibleGuaranteeError as e:
        print(f"covcal: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CovcalError as e:
        print(f"covcal: error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    for envelope in envelopes:
        if args.json:
            print(envelope.to_json_line())
        else:
            print(envelope.to_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
