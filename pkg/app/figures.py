"""
Sweep figures: accuracy matrices over radius or Q combinations.
"""

import logging
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

logger = logging.getLogger(__name__)

sns.set_style("whitegrid")


def plot_sweep_grid(grid: pd.DataFrame, path: str, title: str = "") -> str:
    """Annotated heatmap of an upper-triangular sweep matrix; NaN cells stay blank."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    label = grid.index.name or ""
    axis_name = "R" if label == "radii" else "Q"

    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * len(grid.columns), 0.8 + 0.8 * len(grid.index)))
    sns.heatmap(
        grid.astype(float),
        mask=np.isnan(grid.to_numpy(dtype=float)),
        annot=True,
        fmt=".2f",
        cmap="viridis",
        cbar_kws={"label": "Accuracy (%)"},
        ax=ax,
    )
    ax.set_xlabel(axis_name, fontweight='bold')
    ax.set_ylabel(axis_name, fontweight='bold')
    ax.set_title(title or f"Leave-one-out accuracy by {axis_name} combination", fontweight='bold')
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

    logger.info(f"Saved: {path}")
    return path
