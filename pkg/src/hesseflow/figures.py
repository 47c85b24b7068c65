"""File-based figure rendering for the report path.

Figures are written next to the delimited output when requested; nothing
here opens a display (the Agg backend is forced before pyplot loads).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .flow import FlowRecord  # noqa: E402


def save_residual_figure(records: Sequence[dict], path) -> Path:
    """Horizontal log-scale bars of residuals against their tolerances."""
    rows = [r for r in records if r.get("residual") is not None]
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8.0, max(2.0, 0.42 * len(rows) + 1.2)))
    if rows:
        names = [r["name"] for r in rows]
        floor = 1e-17
        residuals = [max(r["residual"], floor) for r in rows]
        colors = ["#2a7e43" if r.get("passed", True) else "#b03a2e" for r in rows]
        ypos = range(len(rows))
        ax.barh(ypos, residuals, color=colors, height=0.6)
        for y, row in zip(ypos, rows):
            tol = row.get("tolerance")
            if tol:
                ax.plot([tol, tol], [y - 0.4, y + 0.4], color="k", lw=1.2)
        ax.set_yticks(list(ypos))
        ax.set_yticklabels(names, fontsize=8)
        ax.set_xscale("log")
        ax.invert_yaxis()
    ax.set_xlabel("residual (ticks mark tolerances)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_flow_figure(records: Sequence[FlowRecord], path) -> Path:
    """Four-panel time series: driving term, eigenvalue band, conformal
    factor with deviation, and the torus integrals."""
    path = Path(path)
    t = [r.t for r in records]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)

    ax = axes[0, 0]
    ax.plot(t, [r.max_beta for r in records], color="#1f4e79")
    ax.set_ylabel("max |beta|")

    ax = axes[0, 1]
    ax.plot(t, [r.min_eig for r in records], label="min eig g", color="#2a7e43")
    ax.plot(t, [r.max_eig for r in records], label="max eig g", color="#b03a2e")
    ax.legend(fontsize=8)
    ax.set_ylabel("metric eigenvalue band")

    ax = axes[1, 0]
    ax.plot(t, [r.c_hat for r in records], color="#1f4e79")
    ax.set_ylabel("conformal factor c(t)")
    ax2 = ax.twinx()
    ax2.semilogy(t, [max(r.ss_deviation, 1e-18) for r in records],
                 color="#7a7a7a", ls="--", lw=1)
    ax2.set_ylabel("deviation", fontsize=8)
    ax.set_xlabel("t")

    ax = axes[1, 1]
    bt = [r.int_beta_trace for r in records]
    asq = [r.int_alpha_sq for r in records]
    ax.plot(t, bt, label="integral tr_g(beta)", color="#1f4e79")
    ax.plot(t, asq, label="integral |alpha|^2", color="#b03a2e", ls="--")
    ax.legend(fontsize=8)
    ax.set_xlabel("t")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
