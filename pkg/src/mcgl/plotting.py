"""Figure rendering: dataset scatters and sweep curves, written as SVG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# fixed hash salt and no Date metadata: identical figures produce identical bytes
matplotlib.rcParams["svg.hashsalt"] = "mcgl"

import matplotlib.pyplot as plt
import numpy as np
import scipy.sparse as sp
from matplotlib.collections import LineCollection

from .datasets import Dataset
from .errors import InputError

_COLORS = ["tab:blue", "tab:red", "tab:green", "tab:orange",
           "tab:purple", "tab:brown", "tab:pink", "tab:olive"]
_AXIS_LABELS = {"noise_rate": "target noise rate", "depth": "propagation depth K"}


def scatter_plot(ds: Dataset, path: str | Path, title: str | None = None) -> Path:
    """2-D scatter of a dataset: edges as segments, training nodes filled."""
    x = np.asarray(ds.x.todense()) if sp.issparse(ds.x) else np.asarray(ds.x)
    if x.ndim != 2 or x.shape[1] != 2:
        raise InputError("scatter plots need exactly two feature dimensions")
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    if ds.graph.num_edges:
        segs = x[ds.graph.edges]
        ax.add_collection(
            LineCollection(segs, colors="0.75", linewidths=0.8, zorder=1)
        )
    train = np.zeros(ds.num_nodes, dtype=bool)
    train[ds.split.train_ids] = True
    for c in range(ds.num_classes):
        color = _COLORS[c % len(_COLORS)]
        hollow = (ds.y == c) & ~train
        solid = (ds.y == c) & train
        ax.scatter(x[hollow, 0], x[hollow, 1], s=28, facecolors="none",
                   edgecolors=color, linewidths=1.2, zorder=2,
                   label=f"class {c}")
        ax.scatter(x[solid, 0], x[solid, 1], s=48, color=color, zorder=3,
                   label=f"class {c} (train)" if solid.any() else None)
    ax.set_aspect("equal")
    ax.set_xlabel("feature 1")
    ax.set_ylabel("feature 2")
    ax.set_title(title or ds.name)
    ax.legend(loc="best", fontsize=8)
    path = Path(path)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path


def sweep_plot(records, path: str | Path, title: str | None = None) -> Path:
    """Accuracy curves with error bars, one line per (model, noise level)."""
    if not records:
        raise InputError("no records to plot")
    keys = sorted({(r.model, r.group) for r in records},
                  key=lambda k: (k[0], k[1] or ""))
    axis = records[0].axis
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, (model, group) in enumerate(keys):
        rows = sorted(
            (r for r in records if r.model == model and r.group == group),
            key=lambda r: r.value,
        )
        xs = [r.value for r in rows]
        ys = [r.mean * 100 for r in rows]
        errs = [r.std * 100 for r in rows]
        label = model if group is None else f"{model}, noise {group}"
        ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3,
                    color=_COLORS[i % len(_COLORS)], label=label)
    ax.set_xlabel(_AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("test accuracy (%)")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    path = Path(path)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path
