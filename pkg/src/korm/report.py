"""Report envelopes and their canonical JSON / CSV encodings.

Reports are plain nested dicts.  :func:`dumps` writes them with sorted
keys, two-space indentation and every float at 17 significant digits, so
``dumps(loads(dumps(r))) == dumps(r)`` byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Optional

from korm import __version__
from korm.engine import KormRun
from korm.errors import DataError, KormError

SCHEMA_VERSION = 1

PHASE_CSV_FIELDS = (
    "j", "L_j", "F_j", "window_start", "input_medians", "n_medians", "solution_cost",
    "service_cost", "sum_squared_distance", "points_read", "points_read_total",
    "retained_peak", "tco_registry_peak", "tco_events", "real_outliers", "inliers",
)


class ReportError(DataError):
    pass


def fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ReportError("non-finite value in report", value=repr(x))
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2) -> str:
    out = io.StringIO()
    _write(obj, out, 0, indent)
    out.write("\n")
    return out.getvalue()


def _write(obj, out, level, indent):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        out.write(json.dumps(obj))
    elif isinstance(obj, int):
        out.write(str(int(obj)))
    elif isinstance(obj, float):
        out.write(fmt_float(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, key in enumerate(sorted(obj)):
            out.write(pad + json.dumps(str(key)) + ": ")
            _write(obj[key], out, level + 1, indent)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.write("[]")
            return
        out.write("[\n")
        for i, item in enumerate(obj):
            out.write(pad)
            _write(item, out, level + 1, indent)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(end + "]")
    elif hasattr(obj, "item"):  # numpy scalar
        _write(obj.item(), out, level, indent)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportError("report is not valid JSON", reason=str(exc)) from None
    if not isinstance(data, dict) or "schema_version" not in data or "kind" not in data:
        raise ReportError("not a report envelope")
    return data


def load_report(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ReportError("cannot read report", path=str(path), reason=exc.strerror) from None


def _median_entry(med, **extra) -> dict:
    d = {
        "median_id": med.median_id,
        "source_index": med.source_index,
        "created_phase": med.created_phase,
        "weight": float(med.weight),
        "location": [float(x) for x in med.location],
    }
    d.update(extra)
    return d


def korm_report(run: KormRun, metadata: Optional[dict] = None, trace: bool = False,
                timing: Optional[dict] = None) -> dict:
    """Build the report envelope for a finished (or aborted) run."""
    phases = [p.to_dict(trace=trace) for p in run.phases]
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "korm",
        "metadata": {
            "tool": "korm",
            "tool_version": __version__,
            "config": run.config.to_dict(),
            "seed": run.config.seed,
            "rng": run.rng_id,
            "stream_length": run.stream_length,
            **(metadata or {}),
        },
        "phases": phases,
        "final_medians": [_median_entry(m) for m in run.medians],
        "real_outliers": [_median_entry(m, decided_phase=j, outlier_score=m.outlier_score)
                          for m, j in run.real_outliers],
        "inliers_cleared": sorted(run.inliers_cleared),
        "pending_tco": [{"median_id": mid, "since": e.since, "score": e.score}
                        for mid, e in sorted(run.pending.items())],
        "aggregates": aggregates(phases) | {
            "final_medians": len(run.medians),
            "lower_bound_1": float(run.lower_bound_1),
            "peak_retained": run.peak_retained,
            "memory_bound": float(run.memory_bound),
        },
        "aborted": run.aborted,
    }
    if timing is not None:
        report["timing"] = timing
    check_consistency(report)
    return report


def aggregates(phases: list) -> dict:
    return {
        "phases": len(phases),
        "points_read": sum(p["points_read"] for p in phases),
        "real_outliers": sum(1 for p in phases for v in p["verdicts"] if v["verdict"] == "real_outlier"),
        "sum_squared_distance": float(sum(p["sum_squared_distance"] for p in phases)),
        "total_solution_cost": float(sum(p["solution_cost"] for p in phases)),
    }


def check_consistency(report: dict) -> None:
    """Recompute aggregates from the phase records and compare."""
    if report.get("kind") != "korm":
        return
    phases = report["phases"]
    again = aggregates(phases)
    for key, value in again.items():
        if report["aggregates"][key] != value:
            raise KormError("report aggregates disagree with phase records", field=key,
                            stored=report["aggregates"][key], recomputed=value)
    decided = [v["median_id"] for p in phases for v in p["verdicts"] if v["verdict"] == "real_outlier"]
    if sorted(decided) != sorted(o["median_id"] for o in report["real_outliers"]):
        raise KormError("real outliers do not match phase verdicts")
    if len(set(decided)) != len(decided):
        raise KormError("a real outlier was decided twice")
    if phases and phases[-1]["points_read_total"] != again["points_read"]:
        raise KormError("read counters disagree")


def phases_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PHASE_CSV_FIELDS)
    for p in report["phases"]:
        verdicts = p["verdicts"]
        writer.writerow([
            p["j"], fmt_float(p["L_j"]), fmt_float(p["F_j"]), p["window_start"], p["input_medians"],
            p["n_medians"], fmt_float(p["solution_cost"]), fmt_float(p["service_cost"]),
            fmt_float(p["sum_squared_distance"]), p["points_read"], p["points_read_total"],
            p["retained_peak"], p["tco_registry_peak"], len(p["tco_events"]),
            sum(v["verdict"] == "real_outlier" for v in verdicts),
            sum(v["verdict"] == "inlier" for v in verdicts),
        ])
    return buf.getvalue()


def baseline_report(method: str, params: dict, result, metadata: Optional[dict] = None) -> dict:
    if method == "dk":
        body = {"ranking": [{"index": i, "score": float(s)} for i, s in result]}
        count = len(result)
    else:
        body = {"outliers": sorted(int(i) for i in result)}
        count = len(result)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "baseline",
        "metadata": {"tool": "korm", "tool_version": __version__, "method": method,
                     "params": params, **(metadata or {})},
        **body,
        "aggregates": {"outliers": count},
    }


PLOT_FIELDS = ("role", "median_id", "source_index", "weight", "x", "y")


def plot_rows(report: dict, dims: tuple[int, int]) -> list[dict]:
    """One row per final median and real outlier, projected on ``dims``.

    Roles: ``median``, ``real_outlier``, and ``inlier-cleared`` for final
    medians that once stood trial as outlier candidates and were cleared.
    """
    if report.get("kind") != "korm":
        raise ReportError("plot data needs a korm run report", kind=report.get("kind"))
    cleared = set(report.get("inliers_cleared", ()))
    rows = []

    def project(entry):
        loc = entry["location"]
        try:
            return loc[dims[0]], loc[dims[1]]
        except IndexError:
            raise ReportError("projection dimension out of range", dims=list(dims),
                              dimension=len(loc)) from None

    for m in report.get("final_medians", ()):
        x, y = project(m)
        role = "inlier-cleared" if m["median_id"] in cleared else "median"
        rows.append({"role": role, "median_id": m["median_id"], "source_index": m["source_index"],
                     "weight": m["weight"], "x": x, "y": y})
    for o in report.get("real_outliers", ()):
        x, y = project(o)
        rows.append({"role": "real_outlier", "median_id": o["median_id"],
                     "source_index": o["source_index"], "weight": o["weight"], "x": x, "y": y})
    return rows


def plot_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PLOT_FIELDS)
    for r in rows:
        writer.writerow([r["role"], r["median_id"], r["source_index"], fmt_float(float(r["weight"])),
                         fmt_float(float(r["x"])), fmt_float(float(r["y"]))])
    return buf.getvalue()
