"""Command-line front end: ``sepsteer verify | scan | thresholds | protocol``.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 numeric or domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import acceptance
from .correlations import ppt_min_eigenvalue, steering
from .errors import BracketError, DegenerateInput, DomainError, InvalidArgument
from .optimize import (
    AncillaPolicy,
    LinearFamily,
    SteeringPolicy,
    ancilla_ok,
    ancilla_splits,
    bisect_predicate,
    expanding_bracket,
    get_split,
    split_state,
)
from .protocols import (
    Direction,
    ProtocolParams,
    Stage,
    ThresholdKind,
    analytic_threshold,
    build_stage,
    key_rate_bound,
    minimal_separable_noise,
    optimal_displacements,
    reference_network,
    stage_report,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SCAN_COLUMNS = (
    "t", "x", "d_B", "d_D",
    "G_A_to_B", "G_B_to_A", "G_A_to_BD", "G_A_to_D", "G_BD_to_A",
    "ppt_min_C_AB", "ppt_min_ancilla_final", "ancilla_ok", "G_distributed",
    "x_sep_C_AB", "x_sep_ancilla_final", "K",
)

THRESHOLD_COLUMNS = (
    "t", "x_sep_analytic", "x_sep_bisected", "x_nonsteer_bisected",
    "x_steer_dB2", "x_sep_dB2", "x_sep_ABD_forward", "x_sep_ABD_reverse",
)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ScanSpec:
    t_min: float
    t_max: float
    steps: int
    x: float | None = None  # None: analytic minimal separable noise
    d_b: float | None = None  # None: optimal
    d_d: float | None = None
    direction: Direction = Direction.A_TO_B
    policy: AncillaPolicy = AncillaPolicy.SEPARABLE
    fmt: str = "csv"
    out: str | None = None

    def __post_init__(self):
        if not self.t_min > 0:
            raise UsageError("--t-min must be > 0 for steering scans")
        if self.t_max < self.t_min:
            raise UsageError("--t-max must be >= --t-min")
        if self.steps < 2:
            raise UsageError("--steps must be >= 2")
        if self.d_d is not None and not Direction(self.direction).four_mode:
            raise UsageError("--d-d needs a three-user --direction (AtoBD or BDtoA)")

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.steps)

    def params(self, t: float) -> ProtocolParams:
        direction = Direction(self.direction)
        d_b, d_d = self.d_b, self.d_d
        if d_b is None or (direction.four_mode and d_d is None):
            opt_b, opt_d = optimal_displacements(direction, t)
            d_b = opt_b if d_b is None else d_b
            d_d = opt_d if d_d is None else d_d
        x = minimal_separable_noise(direction, t) if self.x is None else self.x
        return ProtocolParams(float(t), float(x), float(d_b), d_d, direction)


# formatting -----------------------------------------------------------------

def fmt_float(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if v is None:
        return "nan"
    return format(float(v), ".12g")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(format(v, ".12g")) if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


def render_table(columns: Sequence[str], rows: list[dict], fmt: str, meta: dict | None = None) -> str:
    if fmt == "json":
        return json.dumps(_json_safe({"meta": meta or {}, "columns": list(columns), "rows": rows}), indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_float(row[c]) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)


# scan -----------------------------------------------------------------------

def _threshold_or_nan(kind: ThresholdKind, t: float) -> float:
    try:
        return analytic_threshold(kind, t)
    except DomainError:
        return math.nan


def scan_row(spec: ScanSpec, t: float) -> dict:
    p = spec.params(t)
    nan = math.nan
    final = build_stage(p, Stage.STEP4 if p.direction.four_mode else Stage.STEP3).cm
    row = {"t": p.t, "x": p.x, "d_B": p.d_b, "d_D": nan if p.d_d is None else p.d_d}
    row["G_A_to_B"] = steering(final, "A'", "B'")
    row["G_B_to_A"] = steering(final, "B'", "A'")
    if p.direction.four_mode:
        row["G_A_to_BD"] = steering(final, "A'", ("B'", "D'"))
        row["G_A_to_D"] = steering(final, "A'", "D'")
        row["G_BD_to_A"] = steering(final, ("B'", "D'"), "A'")
    else:
        row["G_A_to_BD"] = row["G_A_to_D"] = row["G_BD_to_A"] = nan
    first, last = ancilla_splits(p)
    mins = []
    for name in (first, last):
        split = get_split(name)
        mins.append(ppt_min_eigenvalue(split_state(p, split), (split.ancilla,)))
    row["ppt_min_C_AB"], row["ppt_min_ancilla_final"] = mins
    ok = ancilla_ok(p, spec.policy)
    row["ancilla_ok"] = ok
    key = {Direction.A_TO_B: "G_A_to_B", Direction.A_TO_BD: "G_A_to_BD", Direction.BD_TO_A: "G_BD_to_A"}[p.direction]
    row["G_distributed"] = row[key] if ok else 0.0
    row["x_sep_C_AB"] = analytic_threshold(ThresholdKind.SEP_C_AB, p.t)
    if p.direction is Direction.A_TO_BD:
        row["x_sep_ancilla_final"] = analytic_threshold(ThresholdKind.SEP_C_ABD_FORWARD, p.t)
    elif p.direction is Direction.BD_TO_A:
        row["x_sep_ancilla_final"] = _threshold_or_nan(ThresholdKind.SEP_C_ABD_REVERSE, p.t)
    else:
        row["x_sep_ancilla_final"] = nan
    row["K"] = key_rate_bound(row["G_distributed"]) if p.direction is Direction.BD_TO_A else nan
    return row


def run_scan(spec: ScanSpec) -> list[dict]:
    return [scan_row(spec, t) for t in spec.t_grid]


# thresholds -----------------------------------------------------------------

def threshold_row(t: float, tol: float) -> dict:
    d_b = optimal_displacements(Direction.A_TO_B, t)[0]
    fam = LinearFamily(ProtocolParams(t, 0.0, d_b), "C-AB")
    lo, hi = expanding_bracket(fam.entangled)
    x_sep = fam.ppt_boundary(lo, hi, tol)
    steer = lambda x: fam.steerable(x, SteeringPolicy.BOTH)  # noqa: E731
    x_ns = bisect_predicate(steer, 0.0, hi, tol) if steer(0.0) else 0.0
    return {
        "t": t,
        "x_sep_analytic": analytic_threshold(ThresholdKind.SEP_C_AB, t),
        "x_sep_bisected": x_sep,
        "x_nonsteer_bisected": x_ns,
        "x_steer_dB2": _threshold_or_nan(ThresholdKind.DB2_UPPER, t),
        "x_sep_dB2": analytic_threshold(ThresholdKind.DB2_LOWER, t),
        "x_sep_ABD_forward": analytic_threshold(ThresholdKind.SEP_C_ABD_FORWARD, t),
        "x_sep_ABD_reverse": _threshold_or_nan(ThresholdKind.SEP_C_ABD_REVERSE, t),
    }


# commands -------------------------------------------------------------------

def cmd_verify(args) -> int:
    human = args.format == "human"
    results = acceptance.run_all(bs_sign=args.inject_bs_sign, only=args.only,
                                 echo=print if human else None)
    failed = [r for r in results if not r.passed]
    report = {"passed": not failed, "n_checks": len(results), "n_failed": len(failed),
              "checks": [r.to_dict() for r in results]}
    if human:
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        for r in failed:
            print(f"FAILED: C{r.criterion} {r.name}")
    else:
        sys.stdout.write(json.dumps(_json_safe(report), indent=2) + "\n")
    if args.out:
        emit(json.dumps(_json_safe(report), indent=2) + "\n", args.out)
    return EXIT_FAIL if failed else EXIT_OK


def _x_arg(value: str | None) -> float | None:
    if value is None or value == "min":
        return None
    return float(value)


def cmd_scan(args) -> int:
    spec = ScanSpec(args.t_min, args.t_max, args.steps, _x_arg(args.x), args.d_b, args.d_d,
                    Direction(args.direction), AncillaPolicy(args.policy), args.format, args.out)
    rows = run_scan(spec)
    meta = {k: (v.value if hasattr(v, "value") else v) for k, v in asdict(spec).items()}
    emit(render_table(SCAN_COLUMNS, rows, spec.fmt, meta), spec.out)
    return EXIT_OK


def cmd_thresholds(args) -> int:
    if not (0 < args.t_min <= args.t_max <= 1.5):
        raise UsageError("threshold grid must lie in (0, 1.5]")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    rows = [threshold_row(float(t), args.tol) for t in np.linspace(args.t_min, args.t_max, args.steps)]
    meta = {"t_min": args.t_min, "t_max": args.t_max, "steps": args.steps, "tol": args.tol}
    emit(render_table(THRESHOLD_COLUMNS, rows, args.format, meta), args.out)
    return EXIT_OK


def cmd_protocol(args) -> int:
    stage = Stage(args.stage)
    if stage in (Stage.REFERENCE3, Stage.REFERENCE4):
        state = reference_network(args.t, 3 if stage is Stage.REFERENCE3 else 4)
    else:
        direction = Direction(args.direction)
        spec_d_d = args.d_d
        if spec_d_d is not None and not direction.four_mode:
            raise UsageError("--d-d needs a three-user --direction (AtoBD or BDtoA)")
        if args.d_b is None or (direction.four_mode and spec_d_d is None):
            opt_b, opt_d = optimal_displacements(direction, args.t)
            d_b = opt_b if args.d_b is None else args.d_b
            d_d = opt_d if spec_d_d is None else spec_d_d
        else:
            d_b, d_d = args.d_b, spec_d_d
        x = _x_arg(args.x)
        if x is None:
            x = minimal_separable_noise(direction, args.t) if args.t > 0 else 0.0
        state = build_stage(ProtocolParams(args.t, x, d_b, d_d, direction), stage)
    payload = state.to_dict()
    payload["report"] = stage_report(state)
    emit(json.dumps(_json_safe(payload), indent=2) + "\n", args.out)
    return EXIT_OK


# parser ---------------------------------------------------------------------

def _criteria(text: str) -> list[int]:
    try:
        out = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of criterion numbers") from None
    bad = [v for v in out if v not in acceptance.CRITERIA]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown criteria {bad}")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepsteer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--format", choices=("human", "json"), default="human")
    v.add_argument("--out", help="also write the JSON report here")
    v.add_argument("--only", type=_criteria, help="comma-separated criterion numbers")
    v.add_argument("--inject-bs-sign", type=int, choices=(1, -1), default=None, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    def protocol_flags(p):
        p.add_argument("--x", default=None, help="noise variance, or 'min' for the analytic minimum (default)")
        p.add_argument("--d-b", type=float, default=None, help="displacement gain d_B (default: optimal)")
        p.add_argument("--d-d", type=float, default=None, help="displacement gain d_D (default: optimal)")
        p.add_argument("--direction", choices=[d.value for d in Direction], default=Direction.A_TO_B.value)
        p.add_argument("--out", help="output file (default: stdout)")

    s = sub.add_parser("scan", help="steering and separability along a squeezing sweep")
    s.add_argument("--t-min", type=float, default=0.01)
    s.add_argument("--t-max", type=float, default=1.2)
    s.add_argument("--steps", type=int, default=120)
    s.add_argument("--policy", choices=[a.value for a in AncillaPolicy], default=AncillaPolicy.SEPARABLE.value,
                   help="condition on the transmitted mode for G_distributed")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    protocol_flags(s)
    s.set_defaults(func=cmd_scan)

    th = sub.add_parser("thresholds", help="analytic and bisected noise thresholds")
    th.add_argument("--t-min", type=float, default=0.01)
    th.add_argument("--t-max", type=float, default=1.5)
    th.add_argument("--steps", type=int, default=150)
    th.add_argument("--tol", type=float, default=1e-8, help="bisection tolerance in x")
    th.add_argument("--format", choices=("csv", "json"), default="csv")
    th.add_argument("--out", help="output file (default: stdout)")
    th.set_defaults(func=cmd_thresholds)

    pr = sub.add_parser("protocol", help="dump one protocol stage as JSON")
    pr.add_argument("--t", type=float, required=True)
    pr.add_argument("--stage", choices=[st.value for st in Stage], default=Stage.STEP3.value)
    protocol_flags(pr)
    pr.set_defaults(func=cmd_protocol)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (DomainError, DegenerateInput, BracketError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, InvalidArgument, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
