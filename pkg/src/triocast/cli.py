"""Batch command-line front end.

Commands: prep, correlate, importance, forecast, sensitivity, evaluate.
Every command writes deterministic payload files into --out-dir (floats at
6 decimals in CSV, full precision in JSON, seed stamped into every report)
plus a run_meta.json sidecar that carries the only timestamp. Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import SensitivityResult, evaluate, single_factor_sensitivity, sobol_indices, spearman_matrix
from .diagnostics import correlogram
from .exceptions import DataError, NumericalError
from .forest import feature_importance, fit_forest, standardize_importances
from .holt_winters import HoltWinters
from .pipeline import EnsembleWeights, HybridForecaster, combine
from .preprocess import impute_table, ks_normality_test, load_schema, load_table, zscore
from .series import FeatureTable


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems via UsageError (exit 1)."""

    def error(self, message):
        raise UsageError(message)


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.6f}"


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_meta(out_dir: Path, args: argparse.Namespace) -> None:
    meta = {
        "command": args.command,
        "version": __version__,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "argv": [a for a in (args._argv or [])],
    }
    _write_json(out_dir / "run_meta.json", meta)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args, need_schema: bool = True) -> FeatureTable:
    if args.schema:
        roles = load_schema(args.schema)
    elif need_schema:
        raise UsageError("--schema is required for this command")
    else:
        roles = None
    if roles is None:
        # Role-free commands treat every non-year column as an indicator.
        try:
            with open(args.input, newline="", encoding="utf-8") as fh:
                header = next(csv.reader(fh), None)
        except OSError as exc:
            raise DataError(f"cannot read input file {args.input}: {exc}") from exc
        if not header or len(header) < 2:
            raise DataError(f"{args.input}: need a year column plus data columns")
        roles = {name.strip(): "indicator" for name in header[1:]}
    return load_table(args.input, roles)


# -- commands ---------------------------------------------------------------


def cmd_prep(args) -> int:
    out = _out_dir(args)
    table = _load(args)
    missing_rate = table.missing_rate
    cleaned = impute_table(table)

    columns = {}
    for name in cleaned.column_names:
        col = cleaned.column(name)
        entry: dict = {
            "role": cleaned.roles[name],
            "n_missing_before": table.column(name).n_missing,
        }
        try:
            stat, p = ks_normality_test(col)
            entry["ks_statistic"] = stat
            entry["ks_p_value"] = p
        except (DataError, NumericalError) as exc:
            entry["ks_error"] = str(exc)
        try:
            _, stats = zscore(col)
            entry["mean"] = stats.mean
            entry["std"] = stats.std
        except NumericalError as exc:
            entry["normalization_error"] = str(exc)
        columns[name] = entry

    # Cleaned CSV keeps full float precision so clean inputs round-trip.
    with open(out / "cleaned.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year"] + cleaned.column_names)
        for i, year in enumerate(cleaned.years):
            row = [str(int(year))]
            row += [repr(float(cleaned.column(n).values[i])) for n in cleaned.column_names]
            writer.writerow(row)
    _write_json(
        out / "prep_report.json",
        {
            "seed": args.seed,
            "n_rows": table.n_rows,
            "n_columns": len(table.column_names),
            "missing_rate": missing_rate,
            "missing_cells": table.n_missing_cells,
            "columns": columns,
        },
    )
    _write_meta(out, args)
    return 0


def cmd_correlate(args) -> int:
    out = _out_dir(args)
    table = _load(args, need_schema=False)
    names, matrix = spearman_matrix(table)
    for i, name in enumerate(names):
        off_diag = [matrix[i, j] for j in range(len(names)) if j != i]
        if off_diag and all(math.isnan(v) for v in off_diag):
            print(f"warning: column {name!r} is constant; correlations undefined",
                  file=sys.stderr)
    rows = [tuple([name] + [_fmt(matrix[i, j]) for j in range(len(names))])
            for i, name in enumerate(names)]
    _write_csv(out / "correlation.csv", [""] + names, rows)
    _write_meta(out, args)
    return 0


def cmd_importance(args) -> int:
    out = _out_dir(args)
    table = _load(args)
    targets = [args.target] if args.target else table.target_names
    if not targets:
        raise DataError("no target columns in schema")
    table = impute_table(table)
    for target in targets:
        forest = fit_forest(
            table,
            target,
            n_trees=args.trees,
            max_depth=args.max_depth,
            min_samples_split=args.min_samples_split,
            mtry=args.mtry,
            bootstrap=not args.no_bootstrap,
            seed=args.seed,
        )
        raw = feature_importance(forest)
        standardized = standardize_importances(raw)
        ranked = sorted(raw, key=lambda name: (-raw[name], name))
        rank = {name: i + 1 for i, name in enumerate(ranked)}
        rows = [
            (name, _fmt(raw[name]), _fmt(standardized[name]), rank[name])
            for name in ranked
        ]
        _write_csv(
            out / f"importance_{target}.csv",
            ["feature", "raw_importance", "standardized_importance", "rank"],
            rows,
        )
    _write_meta(out, args)
    return 0


def _pipeline_params(args) -> dict:
    params: dict = {}
    if args.config:
        try:
            params = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read config file {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"config file {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(params, dict):
            raise DataError("config file must hold a JSON object")
        allowed = set(HybridForecaster().get_params())
        unknown = set(params) - allowed
        if unknown:
            raise DataError(f"unknown config key(s): {sorted(unknown)}")
        if "weights" in params:
            params["weights"] = tuple(params["weights"])
    if args.grid_weights:
        params["grid_search"] = True
    if args.validation_years is not None:
        params["validation_years"] = args.validation_years
    params["seed"] = args.seed
    return params


def cmd_forecast(args) -> int:
    out = _out_dir(args)
    table = impute_table(_load(args))
    model = HybridForecaster(**_pipeline_params(args)).fit(table)
    report = model.forecast(args.horizon)

    _write_json(out / "forecast_report.json", report.to_json_dict())
    _write_csv(
        out / "forecast_targets.csv",
        ["target", "year", "combined", "rf_component", "hw_component", "alpha", "beta"],
        [
            (name, year, _fmt(c), _fmt(rf), _fmt(hw), _fmt(a), _fmt(b))
            for name, year, c, rf, hw, a, b in report.target_rows()
        ],
    )
    _write_csv(
        out / "forecast_indicators.csv",
        ["indicator", "year", "forecast", "order", "fallback"],
        [
            (name, year, _fmt(v), order, fallback)
            for name, year, v, order, fallback in report.indicator_rows()
        ],
    )

    corr_dir = out / "correlograms"
    corr_dir.mkdir(exist_ok=True)
    for name in table.indicator_names:
        series = table.column(name)
        max_lag = min(10, len(series) // 2 - 1)
        try:
            result = correlogram(series, max_lag)
        except (DataError, NumericalError) as exc:
            print(f"warning: no correlogram for {name!r}: {exc}", file=sys.stderr)
            continue
        _write_csv(
            corr_dir / f"{name}.csv",
            ["lag", "acf", "pacf", "band"],
            [(lag, _fmt(a), _fmt(p), _fmt(band)) for lag, a, p, band in result.to_rows()],
        )
    _write_meta(out, args)
    return 0


def cmd_sensitivity(args) -> int:
    out = _out_dir(args)
    table = impute_table(_load(args))
    targets = table.target_names
    if not targets:
        raise DataError("no target columns in schema")
    target = args.target or targets[0]
    if target not in targets:
        raise DataError(f"{target!r} is not a target column")
    names = table.indicator_names
    if args.factor is not None and args.factor not in names:
        raise DataError(f"{args.factor!r} is not an indicator column")

    forest = fit_forest(
        table, target, n_trees=args.trees, seed=args.seed, bootstrap=True
    )
    smoother = HoltWinters().fit(table.column(target))
    weights = EnsembleWeights(0.7, 0.3)
    hw_next = float(smoother.forecast(1)[0])

    def model(X: np.ndarray) -> np.ndarray:
        rf = np.atleast_1d(forest.predict(X))
        return np.array([combine(float(r), hw_next, weights) for r in rf])

    base = np.array([float(table.column(n).values[-1]) for n in names])
    if np.any(base == 0.0):
        zero = names[int(np.argmin(base != 0.0))]
        raise DataError(f"indicator {zero!r} has a zero base value; "
                        "relative perturbation undefined")
    ranges = []
    for value in base:
        lo, hi = value * (1.0 - args.range_frac), value * (1.0 + args.range_frac)
        ranges.append((min(lo, hi), max(lo, hi)))
    s1, st = sobol_indices(model, ranges, n=args.sobol_n, seed=args.seed)

    results = []
    for i, name in enumerate(names):
        s = single_factor_sensitivity(model, base, i, delta=args.delta,
                                      one_sided=args.one_sided)
        results.append(
            SensitivityResult(
                name=name,
                single_factor=s,
                s1=float(s1[i]),
                st=float(st[i]),
                n=args.sobol_n,
                delta=args.delta,
                range=ranges[i],
            )
        )

    _write_json(
        out / "sensitivity_report.json",
        {
            "seed": args.seed,
            "target": target,
            "delta": args.delta,
            "one_sided": args.one_sided,
            "n": args.sobol_n,
            "base_point": {name: float(v) for name, v in zip(names, base)},
            "factors": {
                r.name: {
                    "single_factor": r.single_factor,
                    "s1": r.s1,
                    "st": r.st,
                    "range": list(r.range),
                }
                for r in results
            },
        },
    )
    if args.factor:
        chosen = next(r for r in results if r.name == args.factor)
        print(f"{args.factor}: S={chosen.single_factor:.6f} "
              f"S1={chosen.s1:.6f} ST={chosen.st:.6f}")
    _write_meta(out, args)
    return 0


def _read_series_csv(path: str) -> tuple[list[int], np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2 or len(rows[0]) < 2:
        raise DataError(f"{path}: expected a header plus year,value rows")
    years, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            years.append(int(row[0]))
            values.append(float(row[1]))
        except ValueError:
            raise DataError(f"{path}:{lineno}: expected year,value numbers") from None
    return years, np.asarray(values)


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    actual_years, actual = _read_series_csv(args.actual)
    models = {}
    for path in args.predicted:
        name = Path(path).stem
        years, values = _read_series_csv(path)
        if years != actual_years:
            raise DataError(f"{path}: years do not match the actuals file")
        metrics = evaluate(actual, values)
        models[name] = {"mae": metrics.mae, "rmse": metrics.rmse, "r2": metrics.r2}
    _write_json(out / "evaluation.json", {"seed": args.seed, "models": models})
    if len(models) > 1:
        _write_csv(
            out / "comparison.csv",
            ["model", "mae", "rmse", "r2"],
            [(name, _fmt(m["mae"]), _fmt(m["rmse"]), _fmt(m["r2"]))
             for name, m in models.items()],
        )
    _write_meta(out, args)
    return 0


# -- parser -----------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> _Parser:
    parser = _Parser(prog="triocast", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: _Parser, schema: bool = True) -> None:
        p.add_argument("--input", required=True, help="input CSV (year + columns)")
        if schema:
            p.add_argument("--schema", help="JSON role schema", default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default=".", help="directory for output files")

    p = sub.add_parser("prep", help="impute missing cells, report KS/normalization stats")
    common(p)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("correlate", help="Spearman correlation matrix CSV")
    common(p, schema=False)
    p.add_argument("--schema", default=None, help="optional role schema")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("importance", help="per-target forest feature importances")
    common(p)
    p.add_argument("--target", default=None, help="one target column (default: all)")
    p.add_argument("--trees", type=_positive_int, default=500)
    p.add_argument("--max-depth", type=_positive_int, default=None)
    p.add_argument("--min-samples-split", type=_positive_int, default=2)
    p.add_argument("--mtry", type=_positive_int, default=None)
    p.add_argument("--no-bootstrap", action="store_true")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("forecast", help="run the full hybrid pipeline")
    common(p)
    p.add_argument("--horizon", type=_positive_int, default=3)
    p.add_argument("--config", default=None, help="JSON file of pipeline parameters")
    p.add_argument("--grid-weights", action="store_true",
                   help="grid-search ensemble weights on a holdout")
    p.add_argument("--validation-years", type=_positive_int, default=None)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("sensitivity", help="elasticity + Sobol indices for one target")
    common(p)
    p.add_argument("--target", default=None, help="target column (default: first)")
    p.add_argument("--factor", default=None, help="indicator to print to stdout")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--one-sided", action="store_true",
                   help="use the bare +delta response instead of the central average")
    p.add_argument("--sobol-n", type=_positive_int, default=4096)
    p.add_argument("--range-frac", type=float, default=0.10,
                   help="half-width of Sobol ranges, relative to the base point")
    p.add_argument("--trees", type=_positive_int, default=500)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("evaluate", help="MAE/RMSE/R2 for prediction files")
    p.add_argument("--actual", required=True, help="CSV of year,value actuals")
    p.add_argument("--predicted", required=True, nargs="+",
                   help="one or more CSVs of year,value predictions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args._argv = argv
        return args.func(args)
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error[numeric]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
