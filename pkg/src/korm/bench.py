"""CPU-time comparison of KORM against the distance-based baselines."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from korm.baselines import db_nested_loop, dk_outliers
from korm.core import KormConfig, Metric, validate_config
from korm.engine import korm_run

METHODS = ("korm", "dk", "db_nested_loop")
RECORD_FIELDS = ("method", "dataset", "n", "params", "rep", "cpu_seconds", "wall_seconds", "peak_retained")
SUMMARY_FIELDS = ("method", "dataset", "n", "reps", "median_cpu_seconds", "median_wall_seconds",
                  "peak_retained")


@dataclass(frozen=True)
class BenchRecord:
    method: str
    dataset: str
    n: int
    params: str
    rep: int
    cpu_seconds: float
    wall_seconds: float
    peak_retained: int


def _clock_floor(name: str) -> float:
    return time.get_clock_info(name).resolution


def warmup() -> None:
    """Compile the numba kernels so the first timed run pays no JIT cost."""
    rng = np.random.default_rng(0)
    korm_run(rng.random((40, 2)), KormConfig(k=2, chunk_size_Num=20))


def _timed(fn):
    c0, w0 = time.process_time(), time.perf_counter()
    out = fn()
    c1, w1 = time.process_time(), time.perf_counter()
    return out, max(c1 - c0, _clock_floor("process_time")), max(w1 - w0, _clock_floor("perf_counter"))


def run_bench(points: np.ndarray, methods=METHODS, reps: int = 5, dataset: str = "data",
              korm_cfg: KormConfig | None = None, knn: int = 3, top_n: int = 7,
              radius: float = 0.45, fraction: float = 0.95,
              baseline_metric: Metric = Metric.EUCLIDEAN) -> list[BenchRecord]:
    """Time each method ``reps`` times, one method after the other.

    Only the algorithm call is inside the clock; loading happened before.
    """
    cfg = validate_config(korm_cfg or KormConfig())
    if "korm" in methods:
        warmup()
    n = len(points)
    jobs = {
        "korm": (lambda: korm_run(points, cfg), _korm_params(cfg), lambda r: r.peak_retained),
        "dk": (lambda: dk_outliers(points, knn, top_n, baseline_metric),
               f"K={knn};n_top={top_n};metric={Metric(baseline_metric).value}", lambda r: n),
        "db_nested_loop": (lambda: db_nested_loop(points, radius, fraction, baseline_metric),
                           f"D={radius};p={fraction};metric={Metric(baseline_metric).value}",
                           lambda r: n),
    }
    records = []
    for method in methods:
        fn, params, peak = jobs[method]
        for rep in range(1, reps + 1):
            out, cpu, wall = _timed(fn)
            records.append(BenchRecord(method, dataset, n, params, rep, cpu, wall, int(peak(out))))
    return records


def _korm_params(cfg) -> str:
    return (f"k={cfg.k};O={cfg.score_threshold_O};gamma={cfg.gamma};beta={cfg.beta};"
            f"Num={cfg.chunk_size_Num};seed={cfg.seed}")


def summarize(records: list[BenchRecord]) -> list[dict]:
    groups: dict = {}
    for r in records:
        groups.setdefault((r.method, r.dataset, r.n), []).append(r)
    out = []
    for (method, dataset, n), rs in groups.items():
        out.append({
            "method": method, "dataset": dataset, "n": n, "reps": len(rs),
            "median_cpu_seconds": statistics.median(r.cpu_seconds for r in rs),
            "median_wall_seconds": statistics.median(r.wall_seconds for r in rs),
            "peak_retained": max(r.peak_retained for r in rs),
        })
    return out


def records_csv(records: list[BenchRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RECORD_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(asdict(r))
    return buf.getvalue()


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
