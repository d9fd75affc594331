"""Figure rendering for the CLI report paths.

Figures are written next to the delimited outputs; they are a convenience
view, the CSV/JSON files remain the authoritative record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def plot_run_series(path, grad_norms, deltas, title: str = "", floor: float | None = None) -> None:
    """Gradient-norm and radius series of one run, stacked."""
    with plt.rc_context(_STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
        k = np.arange(len(grad_norms))
        ax1.plot(k, grad_norms, lw=1.0, color="tab:blue")
        ax1.set_ylabel(r"$\|\nabla\phi(x_k)\|$")
        if floor is not None and np.isfinite(floor) and floor > 0:
            ax1.axhline(floor, color="tab:red", ls="--", lw=1.0, label=f"floor {floor:.4g}")
            ax1.legend(loc="best")
        ax2.plot(k, deltas, lw=1.0, color="tab:orange")
        ax2.set_yscale("log")
        ax2.set_ylabel(r"$\delta_k$")
        ax2.set_xlabel("iteration")
        if title:
            ax1.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_profiles(path, grid, curves: dict, xlabel: str, title: str = "", logx: bool = False) -> None:
    """Profile curves, one line per solver variant."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for name in sorted(curves):
            ax.step(grid, curves[name], where="post", label=name, lw=1.2)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("fraction of problems")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="best", fontsize=8)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_fd_errors(path, sigmas, measured, bounds, title: str = "") -> None:
    """Measured finite-difference errors against the worst-case bound."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.loglog(sigmas, measured, "o-", label="measured error", lw=1.0, ms=4)
        ax.loglog(sigmas, bounds, "s--", label="bound", lw=1.0, ms=4)
        ax.set_xlabel(r"$\sigma$")
        ax.set_ylabel("error")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
