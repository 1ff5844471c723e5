"""Figure rendering for the probe curves; always uses the file-only Agg backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, ax, path: str, title: str, xlabel: str, ylabel: str) -> str:
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def loglog_curves(path: str, series: dict[str, tuple[list[float], list[float]]],
                  title: str, xlabel: str, ylabel: str, references: dict | None = None) -> str:
    """One log-log line per series; ``references`` maps label to ``(xs, ys)`` drawn dashed."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, (xs, ys) in series.items():
        ax.loglog(xs, ys, marker="o", ms=3, label=label)
    for label, (xs, ys) in (references or {}).items():
        ax.loglog(xs, ys, ls="--", lw=1, label=label)
    return _finish(fig, ax, path, title, xlabel, ylabel)
