"""Report figures rendered straight to files with the Agg canvas."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .hcluster import Dendrogram, leaf_order
from .pca import PcaModel, RotatedModel

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
}

HEALTHY_COLOR = "#2b7bba"
DISTRESSED_COLOR = "#c8553d"


def _new(width=5.0, height=3.2):
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    return path


def scree_plot(model: PcaModel, path, k: int | None = None) -> Path:
    with matplotlib.rc_context(RC):
        fig, ax = _new()
        idx = np.arange(1, len(model.eigenvalues) + 1)
        ax.bar(idx, model.eigenvalues, color="#9aa9b8", label="eigenvalue")
        ax.axhline(1.0, color="k", lw=0.8, ls="--", label="unit eigenvalue")
        if k is not None:
            ax.bar(idx[:k], model.eigenvalues[:k], color=HEALTHY_COLOR, label="retained")
        ax.set_xlabel("component")
        ax.set_ylabel("eigenvalue")
        ax.set_xticks(idx)
        ax2 = ax.twinx()
        ax2.plot(idx, 100 * model.cumulative_share, "o-", color=DISTRESSED_COLOR, ms=3)
        ax2.set_ylabel("cumulative variance (%)")
        ax2.set_ylim(0, 105)
        ax.legend(loc="center right")
        return _save(fig, path)


def loadings_plot(rm: RotatedModel, path) -> Path:
    with matplotlib.rc_context(RC):
        fig, ax = _new(4.2, 4.0)
        L = rm.rotated_loadings
        y = L[:, 1] if L.shape[1] > 1 else np.zeros(L.shape[0])
        ax.axhline(0, color="0.6", lw=0.6)
        ax.axvline(0, color="0.6", lw=0.6)
        ax.scatter(L[:, 0], y, s=14, color=HEALTHY_COLOR)
        for name, a, b in zip(rm.feature_names, L[:, 0], y):
            ax.annotate(name, (a, b), textcoords="offset points", xytext=(3, 3))
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
        ax.set_xlabel("rotated component 1")
        ax.set_ylabel("rotated component 2")
        return _save(fig, path)


def dendrogram_plot(d: Dendrogram, labels: Sequence[str], path, k: int | None = None,
                    y: Sequence[int] | None = None) -> Path:
    """Classic U-link dendrogram; leaf labels coloured by class when ``y`` is given."""
    order = leaf_order(d)
    xpos = {leaf: float(i) for i, leaf in enumerate(order)}
    ypos = {leaf: 0.0 for leaf in order}
    cut_height = None
    if k is not None and 1 < k <= d.n_leaves:
        heights = [m.height for m in d.merges]
        cut_height = (heights[-k] + heights[-k + 1]) / 2 if k > 1 else None
    with matplotlib.rc_context(RC):
        fig, ax = _new(max(5.0, 0.12 * d.n_leaves), 3.6)
        for step, m in enumerate(d.merges):
            node = d.n_leaves + step
            xl, xr = xpos[m.left], xpos[m.right]
            yl, yr = ypos[m.left], ypos[m.right]
            ax.plot([xl, xl, xr, xr], [yl, m.height, m.height, yr], color="0.25", lw=0.7)
            xpos[node] = (xl + xr) / 2
            ypos[node] = m.height
        ax.set_xticks(range(len(order)))
        ax.set_xticklabels([labels[i] for i in order], rotation=90)
        if y is not None:
            for tick, leaf in zip(ax.get_xticklabels(), order):
                tick.set_color(DISTRESSED_COLOR if y[leaf] else HEALTHY_COLOR)
        if cut_height is not None:
            ax.axhline(cut_height, color=DISTRESSED_COLOR, lw=0.8, ls="--")
        ax.set_ylabel(f"fusion height ({d.linkage.value})")
        return _save(fig, path)


def probability_plot(probs, y, cutoff: float, path) -> Path:
    probs = np.asarray(probs, dtype=float)
    y = np.asarray(y, dtype=int)
    order = np.argsort(probs, kind="stable")
    with matplotlib.rc_context(RC):
        fig, ax = _new()
        colors = [DISTRESSED_COLOR if y[i] else HEALTHY_COLOR for i in order]
        ax.scatter(np.arange(len(order)), probs[order], c=colors, s=12)
        ax.axhline(cutoff, color="k", lw=0.8, ls="--")
        ax.set_xlabel("company (sorted by fitted probability)")
        ax.set_ylabel("P(distressed)")
        ax.set_ylim(-0.02, 1.02)
        return _save(fig, path)


def correlation_heatmap(corr, names: Sequence[str], path) -> Path:
    with matplotlib.rc_context(RC):
        fig, ax = _new(4.8, 4.2)
        im = ax.imshow(np.asarray(corr), vmin=-1, vmax=1, cmap="RdBu_r")
        ax.set_xticks(range(len(names)))
        ax.set_yticks(range(len(names)))
        ax.set_xticklabels(names, rotation=90)
        ax.set_yticklabels(names)
        fig.colorbar(im, ax=ax, shrink=0.8)
        return _save(fig, path)
