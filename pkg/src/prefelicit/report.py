"""Figure rendering for experiment outputs.

CSVs remain the interchange contract; these helpers render regret / EVOI
trajectories and benchmark bars as PNG files next to them.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_aggregate_csv(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "query_idx": int(row["query_idx"]),
                "strategy": row["strategy"],
                "mean_regret": float(row["mean_regret"]),
                "se_regret": float(row["se_regret"]),
                "mean_evoi": float(row["mean_evoi"]),
                "se_evoi": float(row["se_evoi"]),
            })
    return rows


def _series_by_strategy(rows, mean_key, se_key):
    series = defaultdict(lambda: ([], [], []))
    for row in sorted(rows, key=lambda r: r["query_idx"]):
        xs, ys, es = series[row["strategy"]]
        xs.append(row["query_idx"])
        ys.append(row[mean_key])
        es.append(row[se_key])
    return series


def _plot_metric(rows, mean_key, se_key, ylabel, out_path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for strategy, (xs, ys, es) in _series_by_strategy(rows, mean_key, se_key).items():
        ax.plot(xs, ys, marker="o", label=strategy)
        lo = [y - e for y, e in zip(ys, es)]
        hi = [y + e for y, e in zip(ys, es)]
        ax.fill_between(xs, lo, hi, alpha=0.2)
    ax.set_xlabel("query index")
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.grid(True, linestyle=":")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_aggregate_figures(rows, out_dir):
    """Write regret.png and evoi.png for aggregate rows; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    regret_path = out_dir / "regret.png"
    evoi_path = out_dir / "evoi.png"
    _plot_metric(rows, "mean_regret", "se_regret", "mean regret", regret_path)
    _plot_metric(rows, "mean_evoi", "se_evoi", "mean EVOI", evoi_path)
    return [regret_path, evoi_path]


def render_benchmark_figure(results, out_path):
    """Grouped bar chart of mean per-query wall time by (N, m, k) and strategy."""
    labels = sorted({(r["n"], r["m"], r["k"]) for r in results})
    strategies = sorted({r["strategy"] for r in results})
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(strategies), 1)
    for si, strategy in enumerate(strategies):
        xs, ys, es = [], [], []
        for li, key in enumerate(labels):
            for r in results:
                if (r["n"], r["m"], r["k"]) == key and r["strategy"] == strategy:
                    xs.append(li + si * width)
                    ys.append(r["mean_s"])
                    es.append(r["std_s"])
        ax.bar(xs, ys, width=width, yerr=es, label=strategy)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
    ax.set_xticklabels([f"N={n}\nm={m},k={k}" for n, m, k in labels], fontsize=8)
    ax.set_ylabel("mean seconds per query")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return Path(out_path)
