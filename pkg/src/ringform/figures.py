"""Matplotlib rendering of trajectory and error figures to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulator import TrajectoryRecord


def render_trajectory_figure(record: TrajectoryRecord, path):
    """Vehicle paths in the plane, with start and final formations marked."""
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    z = record.positions
    n = record.n
    for i in range(n):
        ax.plot(z[:, i, 0], z[:, i, 1], lw=0.9)
    z0, zf = z[0], z[-1]
    ring = np.vstack([zf, zf[:1]])
    ax.plot(ring[:, 0], ring[:, 1], "k--", lw=0.8, alpha=0.6)
    ax.scatter(z0[:, 0], z0[:, 1], facecolors="none", edgecolors="tab:gray",
               s=45, label="start", zorder=3)
    ax.scatter(zf[:, 0], zf[:, 1], marker="*", color="k", s=70,
               label="final", zorder=3)
    for i in range(n):
        ax.annotate(str(i + 1), zf[i], textcoords="offset points",
                    xytext=(5, 5), fontsize=8)
    title = f"event: {record.event}"
    if record.t_f is not None:
        title += f", t_f = {record.t_f:.4g}"
    ax.set_title(title, fontsize=10)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    ax.grid(True, lw=0.3, alpha=0.5)
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_error_figure(record: TrajectoryRecord, path):
    """Angle errors and the Lyapunov value against time."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for i in range(record.n):
        ax.plot(record.t, record.errors[:, i], lw=0.8,
                label=rf"$\epsilon_{{{i + 1}}}$")
    ax.plot(record.t, record.lyapunov, "k", lw=1.8, label="V")
    if record.t_f is not None:
        ax.axvline(record.t_f, color="tab:red", lw=0.8, ls=":",
                   label=r"$t_f$")
    ax.set_xlabel("t")
    ax.set_ylabel("angle error")
    ax.grid(True, lw=0.3, alpha=0.5)
    ax.legend(fontsize=8, ncol=2, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
