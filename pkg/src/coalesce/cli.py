"""Command-line front end: explain, compare and bench subcommands.

Wires CSV ingestion through coalition planning, the batched penalized
solver (or the exact sequential baseline) and the weighted least-squares
attribution step. Machine outputs are CSV/JSON with floats printed to 17
significant digits; human summaries round to 2 decimals. Exit codes:
0 success, 1 compute or validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .coalitions import (
    DEFAULT_ANCHOR_WEIGHT,
    CoalitionPlan,
    build_Z,
    enumerate_all,
    sample_coalitions,
)
from .engine import ShapleyResult, explain_batch, solve_kernel_shap
from .errors import CoalesceError, TableFormatError
from .oracle import evaluate_fits, fit_plan
from .solver import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_KAPPA_MULTIPLIER,
    contributions,
    kappa_default,
    solve_plan_chunked,
)
from .synth import default_feature_mix, make_synthetic_table
from .tabular import (
    FeatureSchema,
    build_design,
    column_ranges_for,
    compute_gram,
    encode_row,
    load_predictions,
    load_table,
    _read_csv,
)

SEED_ENV_VAR = "COALESCE_SEED"


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation parameters, echoed verbatim into the manifest."""

    command: str
    training_file: str | None
    prediction_column: str | None
    predictions_file: str | None
    explain_rows_file: str | None
    categorical_hints: tuple[str, ...]
    numeric_hints: tuple[str, ...]
    method: str | None
    coalition_mode: str
    n_draws: int | None
    seed: int
    anchor_weight: float
    kappa_multiplier: float
    chunk_size: int
    threads: int
    joint_assembly: bool
    output: str | None
    emit_v: str | None
    manifest: str | None
    tolerance: float | None
    version: str = __version__


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _split_names(option: str | None) -> tuple[str, ...]:
    if not option:
        return ()
    return tuple(name.strip() for name in option.split(",") if name.strip())


def _resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(
                f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return 0


def _parse_coalition_mode(option: str) -> tuple[str, int | None]:
    if option == "all":
        return "all", None
    if option.startswith("sample:"):
        count = option.split(":", 1)[1]
        try:
            n_draws = int(count)
        except ValueError:
            raise ValueError(
                f"--coalitions sample:N needs an integer N, got {count!r}") from None
        if n_draws < 1:
            raise ValueError(f"--coalitions sample:N needs N >= 1, got {n_draws}")
        return "sample", n_draws
    raise ValueError(
        f"--coalitions must be 'all' or 'sample:N', got {option!r}")


def _check_writable(path_option: str | None) -> None:
    if path_option is None:
        return
    parent = Path(path_option).resolve().parent
    if not parent.is_dir():
        raise ValueError(f"output directory does not exist: {parent}")


def _build_plan(mode: str, n_draws: int | None, p: int, seed: int,
                anchor_weight: float) -> CoalitionPlan:
    if mode == "all":
        return enumerate_all(p, anchor_weight=anchor_weight)
    return sample_coalitions(p, n_draws, seed, anchor_weight=anchor_weight)


def _load_explain_rows(path, schema: FeatureSchema):
    """Read rows to explain, matching feature columns by name."""
    header, data = _read_csv(path)
    positions = []
    for name in schema.feature_names:
        if name not in header:
            raise TableFormatError(
                f"{path}: explain-rows file lacks feature column {name!r}")
        positions.append(header.index(name))
    return [tuple(row[pos] for pos in positions) for row in data]


def _write_phi_csv(path, results: list[ShapleyResult],
                   feature_names) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row_id", "base_value"]
                        + [f"phi_{name}" for name in feature_names])
        for result in results:
            writer.writerow([result.row_id, _fmt(result.base_value)]
                            + [_fmt(value) for value in result.phi])


def _write_v_csv(path, plan: CoalitionPlan, v_rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["row_id", "mask", "v"])
        for row_id, v in v_rows:
            for mask, value in zip(plan.masks, v):
                writer.writerow([row_id, int(mask), _fmt(value)])


def _write_manifest(path, config: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(dataclasses.asdict(config), handle, indent=2, sort_keys=True)
        handle.write("\n")


def _suffixed(path: str, tag: str) -> str:
    if path.endswith(".csv"):
        return f"{path[:-4]}.{tag}.csv"
    return f"{path}.{tag}.csv"


def _report_failures(failures) -> None:
    for row_id, message in failures:
        print(f"row {row_id}: {message}", file=sys.stderr)


class _Inputs:
    """Everything the explain/compare pipelines share, loaded once."""

    def __init__(self, args, config: RunConfig):
        if args.prediction_column is not None:
            schema, rows = load_table(
                args.training, categorical=config.categorical_hints,
                numeric=config.numeric_hints,
                prediction_column=args.prediction_column)
            predictions = load_predictions(args.training, args.prediction_column)
        else:
            schema, rows = load_table(
                args.training, categorical=config.categorical_hints,
                numeric=config.numeric_hints)
            predictions = load_predictions(args.predictions)
        self.schema = schema
        self.predictions = predictions
        self.design = build_design(schema, rows)
        self.column_ranges = column_ranges_for(schema)
        self.gram = compute_gram(self.design, predictions)
        self.kappa = kappa_default(self.gram, config.kappa_multiplier)
        self.plan = _build_plan(config.coalition_mode, config.n_draws,
                                schema.p, config.seed, config.anchor_weight)
        if args.explain_rows is not None:
            self.explain_rows = _load_explain_rows(args.explain_rows, schema)
        else:
            self.explain_rows = rows


def _explain_config(args, command: str) -> RunConfig:
    mode, n_draws = _parse_coalition_mode(args.coalitions)
    return RunConfig(
        command=command,
        training_file=args.training,
        prediction_column=args.prediction_column,
        predictions_file=args.predictions,
        explain_rows_file=args.explain_rows,
        categorical_hints=_split_names(args.categorical),
        numeric_hints=_split_names(args.numeric),
        method=getattr(args, "method", None),
        coalition_mode=mode,
        n_draws=n_draws,
        seed=_resolve_seed(args.seed),
        anchor_weight=args.anchor_weight,
        kappa_multiplier=args.kappa_multiplier,
        chunk_size=args.chunk_size,
        threads=args.threads,
        joint_assembly=args.joint_assembly,
        output=getattr(args, "output", None),
        emit_v=getattr(args, "emit_v", None),
        manifest=getattr(args, "manifest", None),
        tolerance=getattr(args, "tolerance", None),
    )


def _solve_source(inputs: _Inputs, config: RunConfig, method: str):
    if method == "approx":
        return solve_plan_chunked(
            inputs.gram, inputs.plan, inputs.column_ranges, inputs.kappa,
            chunk_size=config.chunk_size, threads=config.threads,
            joint_assembly=config.joint_assembly)
    return fit_plan(inputs.gram, inputs.plan, inputs.column_ranges)


def _v_rows_for(inputs: _Inputs, source, results) -> list:
    rows_by_id = dict(enumerate(inputs.explain_rows))
    out = []
    for result in results:
        encoded = encode_row(inputs.schema, inputs.column_ranges,
                             rows_by_id[result.row_id])
        if hasattr(source, "values"):
            v = contributions(source, encoded, inputs.predictions)
        else:
            v = evaluate_fits(source, encoded)
        out.append((result.row_id, v))
    return out


def cmd_explain(args) -> int:
    config = _explain_config(args, "explain")
    for path in (config.output, config.emit_v, config.manifest):
        _check_writable(path)
    inputs = _Inputs(args, config)
    methods = ["approx", "exact"] if config.method == "both" else [config.method]
    for method in methods:
        source = _solve_source(inputs, config, method)
        results, failures = explain_batch(
            inputs.schema, inputs.column_ranges, inputs.plan, source,
            inputs.explain_rows, inputs.predictions)
        _report_failures(failures)
        phi_path = (_suffixed(config.output, method)
                    if config.method == "both" else config.output)
        _write_phi_csv(phi_path, results, inputs.schema.feature_names)
        if config.emit_v is not None:
            v_path = (_suffixed(config.emit_v, method)
                      if config.method == "both" else config.emit_v)
            _write_v_csv(v_path, inputs.plan, _v_rows_for(inputs, source, results))
    manifest_path = config.manifest or f"{config.output}.manifest.json"
    _write_manifest(manifest_path, config)
    return 0


def cmd_compare(args) -> int:
    config = _explain_config(args, "compare")
    _check_writable(config.manifest)
    _check_writable(args.report)
    inputs = _Inputs(args, config)
    Z = build_Z(inputs.plan)
    weights = inputs.plan.weights

    encoded_rows = []
    for row_id, row in enumerate(inputs.explain_rows):
        encoded_rows.append((row_id, encode_row(inputs.schema,
                                                inputs.column_ranges, row)))

    start = time.perf_counter()
    coeffs = solve_plan_chunked(
        inputs.gram, inputs.plan, inputs.column_ranges, inputs.kappa,
        chunk_size=config.chunk_size, threads=config.threads,
        joint_assembly=config.joint_assembly)
    approx_v = [contributions(coeffs, encoded, inputs.predictions)
                for _, encoded in encoded_rows]
    approx_phi = [solve_kernel_shap(Z, weights, v, row_id=row_id)
                  for (row_id, _), v in zip(encoded_rows, approx_v)]
    seconds_approx = time.perf_counter() - start

    start = time.perf_counter()
    fits = fit_plan(inputs.gram, inputs.plan, inputs.column_ranges)
    exact_v = [evaluate_fits(fits, encoded) for _, encoded in encoded_rows]
    exact_phi = [solve_kernel_shap(Z, weights, v, row_id=row_id)
                 for (row_id, _), v in zip(encoded_rows, exact_v)]
    seconds_exact = time.perf_counter() - start

    dphi = np.abs(np.array([a.phi for a in approx_phi])
                  - np.array([e.phi for e in exact_phi]))
    dv = np.abs(np.array(approx_v) - np.array(exact_v))
    per_feature = dphi.max(axis=0)
    per_coalition = dv.max(axis=0)
    max_dphi = float(per_feature.max())
    passed = max_dphi <= config.tolerance

    report = {
        "tolerance": config.tolerance,
        "n_rows": len(encoded_rows),
        "n_coalitions": len(inputs.plan),
        "max_abs_dphi": max_dphi,
        "per_feature_max_abs_dphi": {
            name: float(value)
            for name, value in zip(inputs.schema.feature_names, per_feature)},
        "max_abs_dv": float(per_coalition.max()),
        "per_coalition_max_abs_dv": [float(value) for value in per_coalition],
        "coalition_masks": [int(mask) for mask in inputs.plan.masks],
        "seconds_approx": seconds_approx,
        "seconds_exact": seconds_exact,
        "speedup_exact_over_approx": seconds_exact / seconds_approx,
        "passed": passed,
    }
    with open(args.report, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")
    if config.manifest is not None:
        _write_manifest(config.manifest, config)

    print(f"max |dphi| = {max_dphi:.2e} (tolerance {config.tolerance:.2e}), "
          f"max |dv| = {report['max_abs_dv']:.2e}")
    print(f"approx {seconds_approx:.2f} s, exact {seconds_exact:.2f} s, "
          f"speedup {report['speedup_exact_over_approx']:.2f}x")
    return 0 if passed else 1


def cmd_bench(args) -> int:
    _check_writable(args.output)
    seed = _resolve_seed(args.seed)
    try:
        p_grid = [int(token) for token in args.p_grid.split(",") if token.strip()]
    except ValueError:
        raise ValueError(f"--p-grid must be a comma list of ints, got "
                         f"{args.p_grid!r}") from None
    if not p_grid:
        raise ValueError("--p-grid is empty")
    records = []
    for p in p_grid:
        n_numeric, levels = default_feature_mix(p)
        schema, rows, predictions = make_synthetic_table(
            args.n_train, n_numeric, levels, seed)
        design = build_design(schema, rows)
        ranges = column_ranges_for(schema)
        gram = compute_gram(design, predictions)
        kappa = kappa_default(gram, args.kappa_multiplier)
        plan = enumerate_all(p)
        Z = build_Z(plan)
        encoded = design.values[0]
        q = gram.q

        start = time.perf_counter()
        coeffs = solve_plan_chunked(gram, plan, ranges, kappa,
                                    chunk_size=args.chunk_size,
                                    threads=args.threads)
        v = contributions(coeffs, encoded, predictions)
        solve_kernel_shap(Z, plan.weights, v)
        seconds_approx = time.perf_counter() - start

        start = time.perf_counter()
        fits = fit_plan(gram, plan, ranges)
        v_exact = evaluate_fits(fits, encoded)
        solve_kernel_shap(Z, plan.weights, v_exact)
        seconds_sequential = time.perf_counter() - start

        resident = min(args.chunk_size, len(plan)) * args.threads
        records.append({
            "p": p, "n_coalitions": len(plan), "method": "approx",
            "seconds": seconds_approx,
            "peak_block_bytes": 2 * resident * q * q * 8,
            "speedup_vs_sequential": seconds_sequential / seconds_approx,
        })
        records.append({
            "p": p, "n_coalitions": len(plan), "method": "sequential",
            "seconds": seconds_sequential,
            "peak_block_bytes": 2 * q * q * 8,
            "speedup_vs_sequential": "",
        })
        print(f"p={p}: approx {seconds_approx:.2f} s, sequential "
              f"{seconds_sequential:.2f} s, speedup "
              f"{seconds_sequential / seconds_approx:.2f}x")

    with open(args.output, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["p", "n_coalitions", "method", "seconds",
                         "peak_block_bytes", "speedup_vs_sequential"])
        for record in records:
            writer.writerow([
                record["p"], record["n_coalitions"], record["method"],
                _fmt(record["seconds"]), record["peak_block_bytes"],
                _fmt(record["speedup_vs_sequential"])
                if record["speedup_vs_sequential"] != "" else ""])
    return 0


def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("training", help="training CSV with a header row")
    predictions = parser.add_mutually_exclusive_group(required=True)
    predictions.add_argument(
        "--prediction-column", metavar="NAME",
        help="column of the training CSV holding model predictions")
    predictions.add_argument(
        "--predictions", metavar="FILE",
        help="single-column CSV holding model predictions")
    parser.add_argument("--explain-rows", metavar="FILE", default=None,
                        help="CSV of rows to explain (default: training rows)")
    parser.add_argument("--categorical", metavar="NAMES", default=None,
                        help="comma list of columns to force categorical")
    parser.add_argument("--numeric", metavar="NAMES", default=None,
                        help="comma list of columns to force numeric")
    parser.add_argument("--coalitions", default="all", metavar="MODE",
                        help="'all' or 'sample:N' (default: all)")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"sampling seed (default: ${SEED_ENV_VAR} or 0)")
    parser.add_argument("--anchor-weight", type=float,
                        default=DEFAULT_ANCHOR_WEIGHT,
                        help="weight of the empty and full coalitions")
    parser.add_argument("--kappa-multiplier", type=float,
                        default=DEFAULT_KAPPA_MULTIPLIER,
                        help="penalty scale as a multiple of max diag(Q)")
    parser.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE,
                        help="coalitions factored per chunk")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads over chunks")
    parser.add_argument("--joint-assembly", action="store_true",
                        help="factor each chunk as one sparse block-diagonal "
                             "system")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coalesce",
        description="Conditional Shapley values for tabular model predictions "
                    "via batched penalized regressions.")
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    explain = commands.add_parser(
        "explain", help="attribute predictions to features")
    _add_data_arguments(explain)
    explain.add_argument("--method", choices=["approx", "exact", "both"],
                         default="approx")
    explain.add_argument("--output", default="shapley.csv",
                         help="attribution CSV (default: shapley.csv)")
    explain.add_argument("--emit-v", metavar="FILE", default=None,
                         help="also write the per-coalition value table")
    explain.add_argument("--manifest", metavar="FILE", default=None,
                         help="run manifest path (default: <output>.manifest.json)")
    explain.set_defaults(handler=cmd_explain)

    compare = commands.add_parser(
        "compare", help="run approx and exact on the same plan and report "
                        "deviations")
    _add_data_arguments(compare)
    compare.add_argument("--tolerance", type=float, default=1e-4,
                         help="max |dphi| allowed for exit code 0")
    compare.add_argument("--report", default="compare_report.json",
                         help="deviation report path")
    compare.add_argument("--manifest", metavar="FILE", default=None)
    compare.set_defaults(handler=cmd_compare)

    bench = commands.add_parser(
        "bench", help="time the batched solver against the sequential "
                      "baseline on synthetic data")
    bench.add_argument("--p-grid", default="8,10,12",
                       help="comma list of feature counts")
    bench.add_argument("--n-train", type=int, default=2000)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--kappa-multiplier", type=float,
                       default=DEFAULT_KAPPA_MULTIPLIER)
    bench.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    bench.add_argument("--threads", type=int, default=1)
    bench.add_argument("--output", default="bench.csv")
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (CoalesceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
