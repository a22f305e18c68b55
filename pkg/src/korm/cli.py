"""Command-line driver.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 run aborted
(degenerate lower bound or no progress).  Failures also print a JSON error
object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from korm import __version__
from korm.baselines import db_nested_loop, dk_outliers
from korm.core import KormConfig, LogBase, Metric, validate_config
from korm.errors import DataError, KormError, RangeError, RunAborted
from korm.ingest import ColumnKind, DatasetSchema, file_digest, load_dataset, minmax_scale
from korm import report as rep

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ABORT = 0, 2, 3, 4
METHOD_NAMES = {"korm": "korm", "dk": "dk", "db-nl": "db_nested_loop", "db_nested_loop": "db_nested_loop"}


def _dataset_args(p: argparse.ArgumentParser, schema_required: bool) -> None:
    p.add_argument("--input", required=True, help="comma-delimited data file")
    p.add_argument("--schema", required=schema_required,
                   help="schema file (one column kind per line) or inline list, e.g. char,numeric,skip")
    p.add_argument("--header", action="store_true", help="first row is a header")
    p.add_argument("--minmax", action="store_true", help="min-max scale every attribute to [0, 1]")


def _korm_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--score-o", type=int, default=2, help="phases a candidate must stay stagnant")
    p.add_argument("--gamma", type=float, default=34.0)
    p.add_argument("--beta", type=float, default=34.0)
    p.add_argument("--num", type=int, default=500, help="chunk size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.SQUARED_EUCLIDEAN.value)
    p.add_argument("--log-base", choices=[b.value for b in LogBase], default=LogBase.TWO.value)
    p.add_argument("--invocation-factor", type=int, default=2)
    p.add_argument("--stream-length", type=int, default=None,
                   help="stream length used by the schedules (default: rows in --input)")


def _baseline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--knn", type=int, default=3, help="K for the K-th nearest neighbour")
    p.add_argument("--top-n", type=int, default=7)
    p.add_argument("--radius", type=float, default=0.45, help="D for DB(p, D)")
    p.add_argument("--fraction", type=float, default=0.95, help="p for DB(p, D)")
    p.add_argument("--baseline-metric", choices=[m.value for m in Metric], default=Metric.EUCLIDEAN.value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="korm", description="Streaming k-median outlier mining")
    parser.add_argument("--version", action="version", version=f"korm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run KORM over a dataset and emit a report")
    _dataset_args(run, schema_required=True)
    _korm_args(run)
    run.add_argument("--format", choices=["json", "csv"], default="json")
    run.add_argument("--trace", action="store_true", help="include per-invocation statistics")
    run.add_argument("--timing", action="store_true",
                     help="add wall/CPU seconds (makes the report non-reproducible)")
    run.add_argument("--output", help="write the report here instead of stdout")
    run.add_argument("--figure", help="also render the phase trace to this image file")

    base = sub.add_parser("baseline", help="run a distance-based baseline")
    _dataset_args(base, schema_required=False)
    base.add_argument("--method", choices=["dk", "db-nl"], required=True)
    _baseline_args(base)
    base.add_argument("--format", choices=["json", "csv"], default="json")
    base.add_argument("--output")

    bench = sub.add_parser("bench", help="time KORM against the baselines")
    _dataset_args(bench, schema_required=False)
    _korm_args(bench)
    _baseline_args(bench)
    bench.add_argument("--methods", default="korm,dk,db-nl")
    bench.add_argument("--reps", type=int, default=5)
    bench.add_argument("--output", help="summary CSV path (default stdout)")
    bench.add_argument("--records", help="per-repetition CSV path")
    bench.add_argument("--figure", help="bar chart of median times")

    plot = sub.add_parser("plotdata", help="export plot data from a run report")
    plot.add_argument("--report", required=True)
    plot.add_argument("--dims", default="0,1", help="two zero-based attribute indices, e.g. 2,3")
    plot.add_argument("--output")
    plot.add_argument("--figure", help="also render the scatter to this image file")
    return parser


def _schema_for(args) -> DatasetSchema:
    if args.schema:
        return DatasetSchema.parse(args.schema, args.header)
    try:
        with open(args.input, encoding="utf-8") as fh:
            first = fh.readline()
    except OSError as exc:
        raise DataError("cannot read input", path=args.input, reason=exc.strerror) from None
    if not first.strip():
        raise DataError("input is empty", path=args.input)
    return DatasetSchema((ColumnKind.NUMERIC,) * len(first.split(",")), args.header)


def _load(args):
    schema = _schema_for(args)
    try:
        points = load_dataset(args.input, schema)
    except FileNotFoundError:
        raise DataError("input file not found", path=args.input) from None
    if args.minmax:
        points = minmax_scale(points)
    meta = {
        "dataset": {
            "file": os.path.basename(args.input),
            "sha256": file_digest(args.input),
            "n_points": int(len(points)),
            "dimension": int(points.shape[1]),
            "columns": [k.value for k in schema.kinds],
            "skipped_columns": [i for i, k in enumerate(schema.kinds) if k is ColumnKind.SKIP],
            "has_header": schema.has_header,
            "minmax_scaled": bool(args.minmax),
        }
    }
    return points, meta


def _config(args) -> KormConfig:
    cfg = KormConfig(
        k=args.k, score_threshold_O=args.score_o, gamma=args.gamma, beta=args.beta,
        chunk_size_Num=args.num, seed=args.seed, metric=Metric(args.metric),
        log_base=LogBase(args.log_base), invocation_factor=args.invocation_factor,
        stream_length=args.stream_length,
    )
    validate_config(cfg)
    return cfg


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    from korm.engine import korm_run

    cfg = _config(args)
    points, meta = _load(args)
    c0, w0 = time.process_time(), time.perf_counter()
    try:
        run = korm_run(points, cfg)
    except RunAborted as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None:
            _emit(rep.dumps(rep.korm_report(partial, meta, trace=args.trace)), args.output)
        raise
    timing = None
    if args.timing:
        timing = {"cpu_seconds": time.process_time() - c0, "wall_seconds": time.perf_counter() - w0}
    report = rep.korm_report(run, meta, trace=args.trace, timing=timing)
    _emit(rep.dumps(report) if args.format == "json" else rep.phases_csv(report), args.output)
    if args.figure:
        from korm.plotting import plot_phase_trace

        plot_phase_trace(report, args.figure)
    return EXIT_OK


def cmd_baseline(args) -> int:
    if args.method == "dk":
        if args.knn < 1 or args.top_n < 1:
            raise RangeError("--knn and --top-n must be positive", knn=args.knn, top_n=args.top_n)
    elif not (0 < args.fraction < 1 and args.radius > 0):
        raise RangeError("need 0 < --fraction < 1 and --radius > 0",
                         fraction=args.fraction, radius=args.radius)
    points, meta = _load(args)
    metric = Metric(args.baseline_metric)
    if args.method == "dk":
        params = {"K": args.knn, "n_top": args.top_n, "metric": metric.value}
        result = dk_outliers(points, args.knn, args.top_n, metric)
    else:
        params = {"D": args.radius, "p": args.fraction, "metric": metric.value}
        result = db_nested_loop(points, args.radius, args.fraction, metric)
    report = rep.baseline_report(METHOD_NAMES[args.method], params, result, meta)
    if args.format == "json":
        _emit(rep.dumps(report), args.output)
    elif args.method == "dk":
        rows = "".join(f"{r['index']},{rep.fmt_float(r['score'])}\n" for r in report["ranking"])
        _emit("index,score\n" + rows, args.output)
    else:
        _emit("index\n" + "".join(f"{i}\n" for i in report["outliers"]), args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    from korm.bench import records_csv, run_bench, summarize, summary_csv

    methods = []
    for name in args.methods.split(","):
        name = name.strip()
        if name not in METHOD_NAMES:
            raise RangeError("unknown bench method", method=name, known=sorted(METHOD_NAMES))
        methods.append(METHOD_NAMES[name])
    if args.reps < 1:
        raise RangeError("--reps must be positive", reps=args.reps)
    cfg = _config(args)
    points, meta = _load(args)
    records = run_bench(points, methods, args.reps, meta["dataset"]["file"], cfg,
                        knn=args.knn, top_n=args.top_n, radius=args.radius,
                        fraction=args.fraction, baseline_metric=Metric(args.baseline_metric))
    summary = summarize(records)
    _emit(summary_csv(summary), args.output)
    if args.records:
        _emit(records_csv(records), args.records)
    if args.figure:
        from korm.plotting import plot_bench

        plot_bench(summary, args.figure)
    return EXIT_OK


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise RangeError("--dims takes two comma-separated integers", dims=text) from None
    if i < 0 or j < 0:
        raise RangeError("--dims must be nonnegative", dims=text)
    return i, j


def cmd_plotdata(args) -> int:
    dims = _parse_dims(args.dims)
    report = rep.load_report(args.report)
    rows = rep.plot_rows(report, dims)
    _emit(rep.plot_csv(rows), args.output)
    if args.figure:
        from korm.plotting import plot_roles

        name = report.get("metadata", {}).get("dataset", {}).get("file")
        plot_roles(rows, args.figure, dims, title=name)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "baseline": cmd_baseline, "bench": cmd_bench, "plotdata": cmd_plotdata}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except KormError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), default=str) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
