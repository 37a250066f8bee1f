"""Figure rendering for solver reports.

Each run gets a spatial error map (scatter of |u - u_ex| over the
evaluation points); each preset additionally gets a metric-trend plot over
its parameter axis.  Files land next to the delimited output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_error_map", "render_preset_trend"]


def render_error_map(table: np.ndarray, title: str, path):
    """Scatter of per-point absolute error; 3D tables are shown per slice."""
    dim = table.shape[1] - 3
    err = table[:, -1]
    if dim == 2:
        fig, ax = plt.subplots(figsize=(5.2, 4.2))
        sc = ax.scatter(table[:, 0], table[:, 1], c=err, s=8, cmap="viridis")
        ax.set_aspect("equal")
        fig.colorbar(sc, ax=ax, label="|u - u_ex|")
    else:
        fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.6))
        planes = [(1, 2, 0), (0, 2, 1), (0, 1, 2)]
        names = "xyz"
        for ax, (i, j, k) in zip(axes, planes):
            mask = np.abs(table[:, k]) < 1e-12
            sc = ax.scatter(table[mask, i], table[mask, j], c=err[mask], s=10, cmap="viridis")
            ax.set_aspect("equal")
            ax.set_title(f"slice {names[k]} = 0", fontsize=9)
            fig.colorbar(sc, ax=ax)
    fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_preset_trend(reports, preset: str, path):
    """Error metrics across a preset's runs on a log scale."""
    labels, em, es, ea = [], [], [], []
    for r in reports:
        cfg = r.config
        if r.method == "ads":
            labels.append(f"k1={cfg.get('k1')}")
        elif r.method == "drm":
            labels.append(f"M={cfg.get('internal_nodes')}")
        else:
            labels.append(f"N={cfg.get('sphere_n')},M={cfg.get('internal_nodes')}")
        em.append(r.err_mean_abs)
        es.append(r.err_rms_rel)
        ea.append(r.err_avg)
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    if any(v is not None for v in ea):
        ax.semilogy(x, ea, "o-", label="volume-avg rel L2")
    ax.semilogy(x, em, "s-", label="mean abs")
    ax.semilogy(x, es, "^-", label="rms rel")
    ax.set_xticks(x, labels, rotation=20)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(preset)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
