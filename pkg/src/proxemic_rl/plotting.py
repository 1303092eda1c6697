"""SVG figures: max-Q curves with a min/max band and Q-value heatmaps."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .env import GridConfig, Region, region_of  # noqa: E402

# fixed id salt and no date stamp keep repeated renders byte-identical
RC = {
    "svg.hashsalt": "proxemic-rl",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.titlesize": 10,
}
SVG_METADATA = {"Date": None}

OUTLINE = {
    Region.ISSUER: ("black", 2.0),
    Region.UNCOMFORTABLE: ("tab:red", 1.4),
    Region.TARGET: ("tab:green", 1.4),
}


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return np.asarray(x, dtype=float)
    kernel = np.ones(window) / window
    # 'valid' would shorten the curve; pad at the front with the first value
    padded = np.concatenate([np.full(window - 1, x[0]), x])
    return np.convolve(padded, kernel, mode="valid")


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def plot_trace(path, mean, lo, hi, title: str = "", smooth: int = 1) -> Path:
    t = np.arange(len(mean))
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        ax.fill_between(t, moving_average(lo, smooth), moving_average(hi, smooth),
                        color="tab:blue", alpha=0.25, linewidth=0, label="min-max")
        ax.plot(t, moving_average(mean, smooth), color="tab:blue", linewidth=1.0, label="mean")
        ax.set_xlabel("time step")
        ax.set_ylabel("max Q")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def symmetric_limit(values: np.ndarray) -> float:
    m = float(np.nanmax(np.abs(values))) if np.size(values) else 0.0
    return m if m > 0 else 1.0


def plot_heatmap(path, values: np.ndarray, cfg: GridConfig, title: str = "",
                 cmap: str = "RdBu_r") -> Path:
    """Heatmap of one value per cell with region outlines.

    The colour scale is symmetric about zero, so an all-zero map renders
    uniformly at mid-scale.
    """
    lim = symmetric_limit(values)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.2, 4.2))
        im = ax.imshow(values, cmap=cmap, vmin=-lim, vmax=lim, origin="upper")
        for pos in cfg.cells():
            style = OUTLINE.get(region_of(pos, cfg))
            if style is None:
                continue
            color, lw = style
            ax.add_patch(Rectangle((pos.col - 0.5, pos.row - 0.5), 1, 1, fill=False,
                                   edgecolor=color, linewidth=lw))
        ax.set_xticks(range(cfg.cols))
        ax.set_yticks(range(cfg.rows))
        ax.set_xlabel("col")
        ax.set_ylabel("row")
        cb = fig.colorbar(im, ax=ax)
        cb.set_label(f"scale [{-lim:.4g}, {lim:.4g}]")
        ax.set_title(f"{title}  (scale ±{lim:.4g})" if title else f"scale ±{lim:.4g}")
        fig.tight_layout()
        return _save(fig, path)


def plot_regions(path, cfg: GridConfig) -> Path:
    labels = np.array([[int(region_of((r, c), cfg)) for c in range(cfg.cols)]
                       for r in range(cfg.rows)])
    colors = matplotlib.colors.ListedColormap(["black", "tab:red", "tab:green", "whitesmoke"])
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.2))
        ax.imshow(labels, cmap=colors, vmin=-0.5, vmax=3.5, origin="upper")
        sr, sc = cfg.start_pos
        ax.text(sc, sr, "S", ha="center", va="center", fontsize=9)
        ax.set_xticks(range(cfg.cols))
        ax.set_yticks(range(cfg.rows))
        ax.set_title("issuer / uncomfortable / target / outside")
        fig.tight_layout()
        return _save(fig, path)
