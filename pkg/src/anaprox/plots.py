"""Figure rendering for evaluation grids and certificates.

Optional companion to the CLI report path: the same data written to the
CSV grid is rendered to a PNG for quick visual inspection.  Rendering
never affects certificates or exit codes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_grid"]


def render_grid(path: str, ts, g_cols, f_vals, err_cols, annuli=None,
                title: str = ""):
    """Overlay f and g, per-order error curves, and per-region verdicts.

    g_cols and err_cols are lists of columns (order 0 first); annuli is
    an optional list of dicts with region/measured/target/passed.
    """
    ts = np.asarray(ts)
    nrows = 3 if annuli else 2
    fig, axes = plt.subplots(nrows, 1, figsize=(8, 3 * nrows), sharex=True)
    ax0, ax1 = axes[0], axes[1]

    ax0.plot(ts, f_vals, label="f", lw=1.5)
    ax0.plot(ts, g_cols[0], label="g", lw=1.0, ls="--")
    ax0.set_ylabel("value")
    ax0.legend(loc="best", fontsize=8)
    if title:
        ax0.set_title(title)

    for k, col in enumerate(err_cols):
        ax1.semilogy(ts, np.maximum(np.abs(col), 1e-18), lw=0.9,
                     label=f"|err{k}|")
    ax1.set_ylabel("abs error")
    ax1.legend(loc="best", fontsize=8)

    if annuli:
        ax2 = axes[2]
        for rec in annuli:
            for (u, v) in rec["region"]:
                color = "tab:green" if rec["passed"] else "tab:red"
                ax2.axvspan(u, v, alpha=0.3, color=color)
            mid = rec["region"][0][0]
            ax2.axhline(rec["target"], lw=0.5, color="gray")
        ax2.plot([r["region"][0][0] for r in annuli],
                 [r["measured"] for r in annuli], "o", ms=4,
                 label="measured")
        ax2.set_yscale("log")
        ax2.set_ylabel("per-region error")
        ax2.legend(loc="best", fontsize=8)
    axes[-1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
