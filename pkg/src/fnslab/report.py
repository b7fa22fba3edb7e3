"""Figure rendering for experiment runs (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_FIGSIZE = (6.4, 4.2)
_DPI = 130


def _finish(fig, ax, path, title, xlabel, ylabel, xlog, ylog):
    ax.set_title(title, fontsize=11)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if xlog:
        ax.set_xscale("log")
    if ylog:
        ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8, ncol=2 if len(ax.lines) > 6 else 1)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return str(path)


def line_figure(path, series, title, xlabel, ylabel,
                xlog=False, ylog=False, marker=""):
    """Plot (label, x, y) triples as lines; empty label = no legend entry."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for label, x, y in series:
        ax.plot(x, y, marker=marker or None, markersize=4,
                linewidth=1.2, label=label or None)
    return _finish(fig, ax, path, title, xlabel, ylabel, xlog, ylog)


def scatter_figure(path, groups, title, xlabel, ylabel,
                   xlog=True, ylog=True, diagonal=False):
    """Plot (label, x, y) point groups; diagonal adds a y = x guide."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    lo, hi = None, None
    for label, x, y in groups:
        ax.plot(x, y, "o", markersize=5, label=label or None)
        for v in (*x, *y):
            lo = v if lo is None else min(lo, v)
            hi = v if hi is None else max(hi, v)
    if diagonal and lo is not None and lo > 0:
        ax.plot([lo, hi], [lo, hi], "k--", linewidth=0.8, label="y = x")
    return _finish(fig, ax, path, title, xlabel, ylabel, xlog, ylog)
