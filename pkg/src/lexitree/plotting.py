"""Figures for command reports, rendered off-screen to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .indivisibility import IndivisibilityReport  # noqa: E402
from .rigid import RigidityReport  # noqa: E402

_PALETTE = {"red": "#c0392b", "blue": "#2e64b0", "none": "#7f7f7f"}


def plot_indivisibility(report: IndivisibilityReport, path: str) -> None:
    """Bar chart of colourings by the colour of the copy found."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    labels = ["red copy", "blue copy", "no copy"]
    counts = [report.red_copies, report.blue_copies, report.failures]
    ax.bar(labels, counts, color=[_PALETTE["red"], _PALETTE["blue"], _PALETTE["none"]])
    for x, c in enumerate(counts):
        ax.annotate(str(c), (x, c), ha="center", va="bottom")
    ax.set_ylabel("colourings")
    ax.set_title(f"{report.structure}: n={report.n}, pattern size {report.m} ({report.mode})")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def plot_rigidity(report: RigidityReport, R: np.ndarray, path: str) -> None:
    """R matrix next to the class isomorphism matrix of each level."""
    levels = sorted(report.class_matrices)
    fig, axes = plt.subplots(1, len(levels) + 1, figsize=(3.2 * (len(levels) + 1), 3.2))
    axes = np.atleast_1d(axes)
    axes[0].imshow(R.astype(int), cmap="Greys", vmin=0, vmax=1)
    axes[0].set_title("R")
    for ax, i in zip(axes[1:], levels):
        m = np.array(report.class_matrices[i], dtype=int)
        ax.imshow(m, cmap="Blues", vmin=0, vmax=1)
        ax.set_title(f"isomorphic s{i}-classes")
        ax.set_xticks(range(len(m)))
        ax.set_yticks(range(len(m)))
    fig.suptitle(f"|Aut| = {report.automorphisms}")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
