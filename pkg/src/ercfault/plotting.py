"""Figures written next to the delimited reports. PNGs carry no software or date
metadata so identical inputs produce identical files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .catalog import ERCS, IMPACTS  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png", dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_report(report, path: str | Path) -> Path:
    """Grouped bars: one group per (ERC, impact), one bar per bucket."""
    buckets = report.buckets
    groups = [(erc, impact) for erc in ERCS for impact in IMPACTS]
    counts = np.array([report.count(erc, None, impact) for erc, impact in groups], dtype=float)
    x = np.arange(len(groups))
    width = 0.8 / len(buckets)
    fig, ax = plt.subplots(figsize=(10, 4))
    for k, b in enumerate(buckets):
        ax.bar(x + (k - (len(buckets) - 1) / 2) * width, counts[:, k], width, label=b)
    ax.set_xticks(x)
    ax.set_xticklabels([f"{e}\n{i}" for e, i in groups], fontsize=7)
    ax.set_ylabel("records")
    ax.set_title(f"{report.mode} outcomes by ERC and impact")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_stats(locs: Sequence[int], histogram: dict | None, path: str | Path) -> Path:
    """Line-count distribution, plus the impact histogram when error data exists."""
    panels = 2 if histogram else 1
    fig, axes = plt.subplots(1, panels, figsize=(5 * panels, 3.5), squeeze=False)
    ax = axes[0][0]
    ax.hist(list(locs), bins=min(20, max(1, len(locs))), color="tab:blue")
    ax.set_xlabel("lines of code")
    ax.set_ylabel("contracts")
    if histogram:
        ax2 = axes[0][1]
        ax2.bar(list(IMPACTS), [histogram.get(i, 0) for i in IMPACTS], color=["tab:red", "tab:orange", "tab:gray"])
        ax2.set_ylabel("records")
        ax2.set_title("security impact")
    fig.tight_layout()
    return _save(fig, path)
