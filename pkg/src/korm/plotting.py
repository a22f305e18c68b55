"""Figures written next to the delimited outputs.

Everything renders through the Agg backend straight to a file; nothing
here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

ROLE_STYLE = {
    "median": dict(color="#4c72b0", marker="o", alpha=0.7, label="median"),
    "inlier-cleared": dict(color="#55a868", marker="s", alpha=0.8, label="cleared inlier"),
    "real_outlier": dict(color="#dd4fa0", marker="X", alpha=1.0, label="real outlier"),
}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_roles(rows, path, dims=(0, 1), title=None):
    """Scatter of final medians and real outliers; marker area follows weight."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for role, style in ROLE_STYLE.items():
        sel = [r for r in rows if r["role"] == role]
        if not sel:
            continue
        w = [float(r["weight"]) for r in sel]
        top = max(w)
        sizes = [20 + 180 * (v / top) ** 0.5 for v in w] if role != "real_outlier" else 90
        ax.scatter([r["x"] for r in sel], [r["y"] for r in sel], s=sizes, edgecolors="k",
                   linewidths=0.4, **style)
    ax.set_xlabel(f"attribute {dims[0]}")
    ax.set_ylabel(f"attribute {dims[1]}")
    if title:
        ax.set_title(title)
    if rows:
        ax.legend(loc="best", fontsize="small")
    _finish(fig, path)


def plot_phase_trace(report, path):
    """Lower bound, facility cost and median count per phase."""
    phases = report["phases"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    js = [p["j"] for p in phases]
    ax1.semilogy(js, [p["L_j"] for p in phases], "o-", label="lower bound")
    ax1.semilogy(js, [p["F_j"] for p in phases], "s--", label="facility cost")
    ax1.set_xlabel("phase")
    ax1.legend(fontsize="small")
    ax2.plot(js, [p["n_medians"] for p in phases], "o-", label="medians kept")
    outl = [sum(v["verdict"] == "real_outlier" for v in p["verdicts"]) for p in phases]
    ax2.bar(js, outl, color="#dd4fa0", alpha=0.6, label="real outliers")
    ax2.set_xlabel("phase")
    ax2.legend(fontsize="small")
    _finish(fig, path)


def plot_bench(summary, path):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    labels = [f"{r['method']}\n(n={r['n']})" for r in summary]
    ax.bar(labels, [r["median_wall_seconds"] for r in summary], color="#4c72b0")
    ax.set_yscale("log")
    ax.set_ylabel("median seconds")
    _finish(fig, path)
