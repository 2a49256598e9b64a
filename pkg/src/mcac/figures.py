"""Matplotlib rendering of run series, final states, and convergence tables.

Figures land next to the delimited outputs; everything uses the Agg backend
so headless runs work.  Nothing here feeds back into the numerics.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .diagnostics import RunReport  # noqa: E402
from .field import Field  # noqa: E402
from .harness import ConvergenceTable  # noqa: E402


def plot_series(report: RunReport, path: str | Path) -> None:
    recs = report.records
    ts = [r.t for r in recs]
    with_radius = any(r.radius is not None for r in recs)
    ncols = 4 if with_radius else 3
    fig, axes = plt.subplots(1, ncols, figsize=(4.2 * ncols, 3.4))

    axes[0].plot(ts, [r.mass for r in recs], color="tab:blue")
    axes[0].set_title("mass")
    axes[1].plot(ts, [r.sup_norm for r in recs], color="tab:red")
    axes[1].axhline(1.0, color="gray", linestyle="--", linewidth=0.8)
    axes[1].set_title("sup norm")
    axes[2].plot(ts, [r.energy for r in recs], color="tab:green")
    axes[2].set_title("energy")
    if with_radius:
        axes[3].plot(ts, [r.radius for r in recs if r.radius is not None],
                     color="tab:purple")
        axes[3].set_title("bubble radius")
    for ax in axes:
        ax.set_xlabel("t")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_field(
    u: Field, path: str | Path, z_index: int | None = None, title: str = ""
) -> None:
    a = u.array
    if u.grid.dim == 3:
        a = a[:, :, u.grid.n_per_dim[2] // 2 if z_index is None else z_index]
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    im = ax.imshow(
        a.T,
        origin="lower",
        extent=(-0.5, 0.5, -0.5, 0.5),
        cmap="RdBu_r",
        vmin=-1.0,
        vmax=1.0,
    )
    fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_convergence(table: ConvergenceTable, path: str | Path) -> None:
    res = [row.resolution for row in table.rows]
    l2 = [row.l2_error for row in table.rows]
    linf = [row.linf_error for row in table.rows]
    xlabel = "tau" if table.kind == "time" else "h"

    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.loglog(res, l2, "o-", label="L2 error")
    ax.loglog(res, linf, "s-", label="Linf error")
    # slope guides anchored at the coarsest point
    for order, style in ((1, ":"), (2, "--")):
        guide = [l2[0] * (r / res[0]) ** order for r in res]
        ax.loglog(res, guide, style, color="gray",
                  label=f"order {order}", linewidth=0.9)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def nice_time(t: float) -> str:
    """Compact time tag for filenames: 1.0 -> '1', 0.25 -> '0.25'."""
    if math.isclose(t, round(t), abs_tol=1e-12):
        return str(int(round(t)))
    return repr(float(t))
