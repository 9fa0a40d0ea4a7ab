"""Figures for runs and comparisons (PNG files via the Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .stats import StatsReport  # noqa: E402

METRIC_LABELS = {
    "delivery_prob": "delivery probability",
    "delay_prob": "delay (latency / TTL)",
    "latency_avg": "mean latency [s]",
}


def _finish(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_timeseries(series: Mapping[str, Sequence[dict]], metric: str,
                    path: Union[str, Path]) -> Path:
    """Cumulative ``metric`` against simulated hours, one line per run."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, rows in series.items():
        hours = [r["time"] / 3600.0 for r in rows]
        ax.plot(hours, [r[metric] for r in rows], label=label)
    ax.set_xlabel("simulated time [h]")
    ax.set_ylabel(METRIC_LABELS.get(metric, metric))
    ax.grid(alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_comparison(columns: Sequence[tuple[str, StatsReport]], metric: str,
                    path: Union[str, Path]) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    labels = [label for label, _ in columns]
    values = [getattr(rep, metric) for _, rep in columns]
    bars = ax.bar(range(len(values)), values, color="0.55", edgecolor="black")
    for bar, v in zip(bars, values):
        ax.annotate(f"{v:.4f}", (bar.get_x() + bar.get_width() / 2, v),
                    ha="center", va="bottom", fontsize=7)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel(METRIC_LABELS.get(metric, metric))
    return _finish(fig, path)


def render_figures(columns: Sequence[tuple[str, StatsReport]],
                   series: Mapping[str, Sequence[dict]],
                   outdir: Union[str, Path]) -> list[Path]:
    outdir = Path(outdir)
    written = []
    for metric in ("delivery_prob", "delay_prob"):
        if series:
            written.append(plot_timeseries(series, metric, outdir / f"timeseries_{metric}.png"))
        if columns:
            written.append(plot_comparison(columns, metric, outdir / f"comparison_{metric}.png"))
    return written
