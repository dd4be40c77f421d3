"""Figure rendering for the report paths: a confusion-matrix heatmap next to
the evaluation report and count bar charts next to dataset statistics."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus import DatasetStats
from .metrics import ConfusionMatrix

_PNG_METADATA = {"Software": "hadkit"}  # fixed so reruns stay byte-stable


def render_confusion_heatmap(cm: ConfusionMatrix, path: str | Path) -> None:
    n = len(cm.classes)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * n + 2.0), max(5.0, 0.6 * n + 1.5)))
    image = ax.imshow(cm.cells, cmap="Blues")
    ax.set_xticks(range(n), cm.classes, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(n), cm.classes, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    peak = max((max(row) for row in cm.cells), default=0.0)
    for i, row in enumerate(cm.cells):
        for j, value in enumerate(row):
            if value == 0:
                continue
            shown = f"{value:g}"
            color = "white" if peak and value > 0.5 * peak else "black"
            ax.text(j, i, shown, ha="center", va="center", fontsize=7, color=color)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)


def render_stats_bars(stats: DatasetStats, path: str | Path) -> None:
    fig, (ax_type, ax_task) = plt.subplots(1, 2, figsize=(12, 4.5))
    for ax, counts, title in (
        (ax_type, stats.per_type, "records per hallucination type"),
        (ax_task, stats.per_task, "records per task kind"),
    ):
        keys = list(counts)
        values = [counts[k] for k in keys]
        ax.bar(range(len(keys)), values, color="#4878a8")
        ax.set_xticks(range(len(keys)), keys, rotation=45, ha="right", fontsize=8)
        ax.set_title(title, fontsize=10)
        for x, v in enumerate(values):
            ax.text(x, v, str(v), ha="center", va="bottom", fontsize=7)
    fig.suptitle(f"{stats.total} records: {stats.positives} hallucinated / {stats.negatives} clean")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
