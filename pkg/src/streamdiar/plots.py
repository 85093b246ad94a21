"""Figure rendering for report outputs (headless, file-based).

Figures accompany the CSVs the CLI writes: a sweep produces an
accuracy-vs-enrollment-time curve per setting, and a single run produces a
stacked bar chart of the DER components.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import AggregateRow
from .io import ReportRow


def _setting_label(classifier: str, adaptive: bool) -> str:
    return f"{classifier} (adaptive)" if adaptive else classifier


def render_sweep_figure(rows: Sequence[AggregateRow], path: str | Path) -> Path:
    """Mean accuracy vs enrollment seconds, one line per setting."""
    if not rows:
        raise ValueError("no aggregate rows to plot")
    path = Path(path)
    series: dict[tuple[str, bool], list[AggregateRow]] = {}
    for row in rows:
        series.setdefault((row.classifier, row.adaptive), []).append(row)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for (classifier, adaptive), group in sorted(series.items()):
        group = sorted(group, key=lambda r: r.train_seconds)
        xs = [r.train_seconds for r in group]
        ys = [r.accuracy_mean for r in group]
        errs = [r.accuracy_std for r in group]
        ax.errorbar(
            xs,
            ys,
            yerr=errs,
            marker="o",
            markersize=3.5,
            capsize=2,
            linewidth=1.2,
            linestyle="--" if not adaptive else "-",
            label=_setting_label(classifier, adaptive),
        )
    ax.set_xlabel("enrollment seconds per speaker")
    ax.set_ylabel("mean test accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_der_figure(rows: Sequence[ReportRow], path: str | Path) -> Path:
    """Stacked confusion/false-alarm/miss bars, one bar per report row."""
    if not rows:
        raise ValueError("no report rows to plot")
    path = Path(path)
    labels = [
        f"{r.file}\n{_setting_label(r.classifier, r.adaptive)} @ {r.train_seconds:g}s"
        for r in rows
    ]
    confusion = [r.confusion for r in rows]
    fa = [r.fa for r in rows]
    miss = [r.miss for r in rows]

    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(rows) + 2.0), 4.5))
    xs = range(len(rows))
    ax.bar(xs, confusion, label="confusion")
    ax.bar(xs, fa, bottom=confusion, label="false alarm")
    ax.bar(xs, miss, bottom=[c + f for c, f in zip(confusion, fa)], label="miss")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("rate")
    ax.set_title("DER decomposition")
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
