"""Command-line front end.

Subcommands: ``test`` (changepoint tests on an ingested series),
``power`` / ``samplesize`` / ``posthoc`` (analytic power), and
``simulate`` (Monte Carlo rejection-rate tables).  Reports print as
text, JSON, or CSV; all formats carry the same numbers.

Exit codes: 0 success, 2 usage error (bad flags or specification
text), 3 data error (unreadable or degenerate input).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .errors import IngestionError, ParseError, SegpowerError
from .model_core import build_design
from .power import (
    PowerRequest,
    compute_power,
    fit_segmented,
    parse_covariate_spec,
    posthoc_power,
    sample_size,
)
from .pscore import DEFAULT_K, JUMP, estimate_changepoint, make_term_spec, pscore_statistic
from .simlab import TESTS, load_scenarios, rejection_rates
from .tfcp_tests import Series, l_max_binary, w_max_test


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def _parse_cell(raw: str, row: int, column: str) -> float:
    text = raw.strip()
    if not text:
        raise IngestionError(f"row {row}, column {column!r}: empty cell")
    try:
        return float(text)
    except ValueError:
        raise IngestionError(
            f"row {row}, column {column!r}: could not parse {text!r}"
        ) from None


def ingest_series(path) -> Series:
    """Read a series from a CSV file.

    The header names the columns: ``y`` (required), ``z``, ``label``,
    and ``b`` (optional).  A headerless single-column file of numbers
    is accepted as a bare y column.  Non-numeric or empty cells are
    rejected with their row and column named.
    """
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise IngestionError(f"{path} is empty")

    header = [c.strip().lower() for c in rows[0]]
    headerless = all(_is_number(c) for c in rows[0])
    if headerless:
        if len(rows[0]) != 1:
            raise IngestionError("headerless input must have a single y column")
        header, data = ["y"], rows
    else:
        data = rows[1:]
    if "y" not in header:
        raise IngestionError("missing required column 'y'")
    known = {"y", "z", "label", "b"}
    for name in header:
        if name not in known:
            raise IngestionError(f"unknown column {name!r} (expected y, z, label, b)")

    width = len(header)
    columns = {name: [] for name in header}
    for i, row in enumerate(data):
        rownum = i + (1 if headerless else 2)
        if len(row) != width:
            raise IngestionError(
                f"row {rownum}: expected {width} cells, got {len(row)}"
            )
        for name, cell in zip(header, row):
            if name == "label":
                columns[name].append(cell.strip())
            else:
                columns[name].append(_parse_cell(cell, rownum, name))

    n = len(columns["y"])
    if n < 4:
        raise IngestionError(f"need at least 4 observations, got {n}")
    return Series(
        y=np.asarray(columns["y"]),
        z=np.asarray(columns["z"]) if "z" in columns else None,
        labels=tuple(columns["label"]) if "label" in columns else None,
        b=np.asarray(columns["b"]) if "b" in columns else None,
    )


def _is_number(text: str) -> bool:
    try:
        float(text.strip())
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _label_at(series: Series, z_value: float):
    """Label of the last observation at or below a changepoint value."""
    if series.labels is None:
        return None
    zv = series.z if series.z is not None else np.asarray(series.time_index, float)
    idx = int(np.searchsorted(zv, z_value, side="right")) - 1
    idx = min(max(idx, 0), series.n - 1)
    return series.labels[idx]


def _run_test(args) -> dict:
    series = ingest_series(args.input)
    methods = ["pscore", "w"] if args.method == "both" else [args.method]
    z = series.z if series.z is not None else np.asarray(series.time_index, float)
    results = {}
    for method in methods:
        if method == "pscore":
            X = build_design([], n=series.n)
            spec = make_term_spec(z, kind=JUMP, K=min(DEFAULT_K, series.n - 2))
            res = pscore_statistic(series.y, X, spec)
            psi_hat = estimate_changepoint(series.y, X, z, kind=JUMP)
            results["pscore"] = {
                "s0": res.s0,
                "p_value": res.p_value,
                "reject": bool(res.p_value <= args.alpha),
                "psi_hat": psi_hat,
                "changepoint_label": _label_at(series, psi_hat),
            }
        elif method == "w":
            res = w_max_test(series, alpha=args.alpha)
            results["w"] = {
                "t_max": res.t_max,
                "w_max": res.w_max,
                "critical_value": res.critical_value,
                "reject": bool(res.reject),
                "j_hat": res.j_hat,
                "changepoint_label": (
                    series.labels[res.j_hat - 1] if series.labels is not None else None
                ),
            }
        elif method == "l":
            if series.b is None:
                raise IngestionError("the l test needs a 'b' column of difficulties")
            res = l_max_binary(series.y, series.b)
            results["l"] = {
                "l_max": res.l_max,
                "critical_value": 8.85,
                "reject": bool(res.reject),
                "j_hat": res.j_hat,
                "changepoint_label": (
                    series.labels[res.j_hat - 1] if series.labels is not None else None
                ),
            }
    return {
        "command": "test",
        "input": str(args.input),
        "alpha": args.alpha,
        "n": series.n,
        "methods": methods,
        "results": results,
    }


def _power_request(args, n=None, target=None) -> PowerRequest:
    return PowerRequest(
        psi=args.psi,
        delta=args.delta,
        sigma=args.sigma,
        z_spec=parse_covariate_spec(args.z),
        n=n,
        target_power=target,
        alpha=args.alpha,
        alternative=args.alternative,
    )


def _run_power(args) -> dict:
    req = _power_request(args, n=args.n)
    res = compute_power(req)
    return {
        "command": "power",
        "n": args.n,
        "z": req.z_spec.text,
        "psi": args.psi,
        "delta": args.delta,
        "sigma": args.sigma,
        "alpha": args.alpha,
        "alternative": args.alternative,
        "e1": res.e1,
        "power": res.power,
    }


def _run_samplesize(args) -> dict:
    req = _power_request(args, target=args.power)
    n = sample_size(req)
    at_n = compute_power(
        PowerRequest(
            psi=args.psi,
            delta=args.delta,
            sigma=args.sigma,
            z_spec=req.z_spec,
            n=n,
            alpha=args.alpha,
            alternative=args.alternative,
        )
    )
    return {
        "command": "samplesize",
        "target_power": args.power,
        "z": req.z_spec.text,
        "psi": args.psi,
        "delta": args.delta,
        "sigma": args.sigma,
        "alpha": args.alpha,
        "alternative": args.alternative,
        "n": n,
        "power_at_n": at_n.power,
    }


def _run_posthoc(args) -> dict:
    series = ingest_series(args.input)
    if series.z is None:
        raise IngestionError("posthoc needs a 'z' column")
    X = np.column_stack([np.ones(series.n), series.z])
    fit = fit_segmented(series.y, X, series.z)
    res = posthoc_power(
        fit,
        series.z,
        alpha=args.alpha,
        alternative=args.alternative,
        ci_draws=args.ci_draws if args.ci_draws > 0 else None,
        seed=args.seed,
    )
    return {
        "command": "posthoc",
        "input": str(args.input),
        "n": series.n,
        "alpha": args.alpha,
        "alternative": args.alternative,
        "fit": {
            "psi_hat": fit.psi_hat,
            "delta_hat": fit.delta_hat,
            "sigma_hat": fit.sigma_hat,
        },
        "power": res.power,
        "ci": list(res.ci) if res.ci is not None else None,
        "ci_draws": args.ci_draws,
        "seed": args.seed,
    }


def _run_simulate(args):
    scenarios = load_scenarios(args.scenarios)
    tests = tuple(t.strip() for t in args.tests.split(",") if t.strip())
    for name in tests:
        if name not in TESTS:
            raise ParseError(
                f"unknown test '{name}'; choose from {', '.join(TESTS)}", 0
            )
    table = rejection_rates(
        scenarios,
        tests,
        reps=args.reps,
        alpha=args.alpha,
        seed=args.seed,
        workers=args.workers,
    )
    report = {
        "command": "simulate",
        "alpha": table.alpha,
        "reps": args.reps,
        "seed": args.seed,
        "tests": list(tests),
        "rows": json.loads(table.to_json())["rows"],
    }
    return report, table


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _fmt_value(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _render_text(report: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_render_text(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(_render_text(item, indent + 1))
                lines.append(f"{pad}  -")
            lines.pop()
        elif isinstance(value, list):
            lines.append(f"{pad}{key}: {', '.join(_fmt_value(v) for v in value)}")
        else:
            lines.append(f"{pad}{key}: {_fmt_value(value)}")
    return "\n".join(lines)


def _emit(report: dict, fmt: str, csv_text: str = None) -> None:
    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    elif fmt == "csv":
        if csv_text is None:
            raise ParseError("csv output is only available for simulate", 0)
        sys.stdout.write(csv_text)
    else:
        print(_render_text(report))


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _default_seed() -> int:
    env = os.environ.get("SEGPOWER_SEED")
    return int(env) if env else 0


def _add_power_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--z", default="equispaced", help="covariate spec text")
    p.add_argument("--psi", type=float, required=True, help="changepoint value")
    p.add_argument("--delta", type=float, required=True, help="slope difference")
    p.add_argument("--sigma", type=float, required=True, help="error sd")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument(
        "--alternative",
        choices=["two-sided", "greater", "less"],
        default="two-sided",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segpower",
        description="Changepoint tests and power analysis for segmented models.",
    )
    parser.add_argument(
        "--output", choices=["text", "json", "csv"], default="text"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run changepoint tests on a series")
    p_test.add_argument("input", help="CSV file with a y column")
    p_test.add_argument(
        "--method", choices=["pscore", "w", "l", "both"], default="both"
    )
    p_test.add_argument("--alpha", type=float, default=0.05)

    p_power = sub.add_parser("power", help="analytic power at a fixed n")
    p_power.add_argument("--n", type=int, required=True)
    _add_power_flags(p_power)

    p_size = sub.add_parser("samplesize", help="smallest n reaching a target power")
    p_size.add_argument("--power", type=float, required=True, help="target power")
    _add_power_flags(p_size)

    p_post = sub.add_parser("posthoc", help="power at a fitted model's estimates")
    p_post.add_argument("input", help="CSV file with y and z columns")
    p_post.add_argument("--alpha", type=float, default=0.01)
    p_post.add_argument(
        "--alternative",
        choices=["two-sided", "greater", "less"],
        default="two-sided",
    )
    p_post.add_argument("--ci-draws", type=int, default=0)
    p_post.add_argument("--seed", type=int, default=_default_seed())

    p_sim = sub.add_parser("simulate", help="Monte Carlo rejection-rate table")
    p_sim.add_argument("--scenarios", required=True, help="scenario JSON file")
    p_sim.add_argument("--tests", default="pscore", help="comma list: pscore,w,l")
    p_sim.add_argument("--reps", type=int, default=1000)
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--seed", type=int, default=_default_seed())
    p_sim.add_argument("--workers", type=int, default=1)

    return parser


_RUNNERS = {
    "test": _run_test,
    "power": _run_power,
    "samplesize": _run_samplesize,
    "posthoc": _run_posthoc,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if not 0.0 < getattr(args, "alpha", 0.05) < 1.0:
            parser.error("alpha must be in (0, 1)")
        if args.command == "simulate":
            report, table = _run_simulate(args)
            _emit(report, args.output, csv_text=table.to_csv())
        else:
            report = _RUNNERS[args.command](args)
            _emit(report, args.output)
        return 0
    except SystemExit as exc:  # parser.error inside the try
        return int(exc.code or 0)
    except ParseError as exc:
        print(f"segpower: {exc}", file=sys.stderr)
        return 2
    except IngestionError as exc:
        print(f"segpower: {exc}", file=sys.stderr)
        return 3
    except (SegpowerError, OSError, ValueError) as exc:
        print(f"segpower: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
