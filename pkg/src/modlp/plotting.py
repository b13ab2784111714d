"""Deterministic SVG figures for the command-line reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "modlp",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.5,
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def semilog_series(series: dict[str, np.ndarray], path: str | Path, xlabel: str, ylabel: str,
                   x: dict[str, np.ndarray] | None = None, title: str | None = None) -> Path:
    """One marker line per labelled positive series on a log y-axis."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for label in sorted(series):
            y = np.asarray(series[label], dtype=float)
            xs = np.arange(1, y.size + 1) if x is None else np.asarray(x[label], dtype=float)
            keep = y > 0
            ax.semilogy(xs[keep], y[keep], "o-", label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if series:
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def bounds_plot(labels: list[str], lower, upper, oracle, path: str | Path) -> Path:
    """Lower and upper bounds per configuration, with oracle values where present."""
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    idx = np.arange(len(labels))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.18 * len(labels) + 2), 3.4))
        ax.vlines(idx, lower, upper, color="0.6")
        ax.semilogy(idx, lower, "v", label="lower")
        ax.semilogy(idx, upper, "^", label="upper")
        orc = np.array([np.nan if o is None else o for o in oracle], dtype=float)
        if np.any(np.isfinite(orc)):
            ax.semilogy(idx, orc, "x", label="oracle")
        ax.set_xlabel("configuration")
        ax.set_ylabel("nuclearity bound")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)
