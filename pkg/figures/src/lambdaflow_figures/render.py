"""Figure rendering from the simulator's delimited outputs.

Three figure kinds:

- flow-timeseries: level populations and the two flow coefficients
  versus time, with every unidirectional window from the interval
  sidecar framed in dashed green.
- duration-heatmap: first-window duration over a 2-D parameter grid;
  zero-duration cells are painted a distinct dark blue. The grid can be
  pivoted either on (gamma1, gamma2) or on (gamma2, gamma1 - gamma2)
  for maps swept in the memory difference.
- diode-overlay: bath currents of the forward and reversed geometries
  on shared axes.

Rendering is deterministic: a fixed style, a fixed dpi, and no
timestamp or software metadata in the output files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import colors

from .readers import (
    FigureInputError,
    SIMULATE_REQUIRED,
    SWEEP_REQUIRED,
    read_intervals,
    read_table,
)

KINDS = ("flow-timeseries", "duration-heatmap", "diode-overlay")

_STYLE = {
    "figure.figsize": (7.0, 4.6),
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.labelsize": 12,
    "legend.fontsize": 9,
    "lines.linewidth": 1.6,
}

_FRAME_COLOR = "#1a9641"
_ZERO_COLOR = "#00104d"


@dataclass
class RenderResult:
    path: Path
    n_shaded: int = 0
    n_zero_cells: int = 0


def _save(fig, out_path: Path) -> None:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # strip the default Software tag so output bytes depend only on data
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)


def render_flow_timeseries(
    csv_path: Path | str,
    out_path: Path | str,
    intervals_path: Path | str | None = None,
) -> RenderResult:
    data = read_table(csv_path, SIMULATE_REQUIRED)
    shaded = 0
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        t = data["t"]
        ax.plot(t, data["rho11"], label=r"$\rho_{11}$", color="#d7191c")
        ax.plot(t, data["rho22"], label=r"$\rho_{22}$", color="#fdae61")
        ax.plot(t, data["rho33"], label=r"$\rho_{33}$", color="#2b83ba")
        ax.plot(
            t, data["reF1"], label=r"$\mathrm{Re}\,F_1$", color="#5e3c99", ls="--"
        )
        ax.plot(
            t, data["reF2"], label=r"$\mathrm{Re}\,F_2$", color="#008837", ls="--"
        )
        if intervals_path is not None:
            windows = read_intervals(intervals_path)
            for t0, t1 in zip(windows["t_start"], windows["t_end"]):
                ax.axvspan(t0, t1, color=_FRAME_COLOR, alpha=0.12)
                for edge in (t0, t1):
                    ax.axvline(edge, color=_FRAME_COLOR, ls="--", lw=1.0)
                shaded += 1
        ax.axhline(0.0, color="black", lw=0.8, alpha=0.5)
        ax.set_xlabel(r"$\omega t$")
        ax.set_ylabel("populations and flow coefficients")
        ax.legend(loc="upper right", ncol=2)
        _save(fig, Path(out_path))
    return RenderResult(path=Path(out_path), n_shaded=shaded)


def _pivot(values, rows, cols, cell):
    """Arrange per-row cell values onto the (rows x cols) product grid."""
    r_idx = {v: i for i, v in enumerate(rows)}
    c_idx = {v: j for j, v in enumerate(cols)}
    grid = np.full((len(rows), len(cols)), np.nan)
    for r, c, v in zip(values[0], values[1], cell):
        grid[r_idx[r], c_idx[c]] = v
    if np.isnan(grid).any():
        raise FigureInputError("sweep rows do not form a full product grid")
    return grid


def render_duration_heatmap(
    csv_path: Path | str, out_path: Path | str, diff_axes: bool = False
) -> RenderResult:
    data = read_table(csv_path, SWEEP_REQUIRED)
    g1 = data["gamma1"]
    g2 = data["gamma2"]
    # quantize once so per-cell float noise collapses onto grid values
    if diff_axes:
        x_vals, y_vals = np.round(g1 - g2, 9), np.round(g2, 9)
        x_label, y_label = r"$(\gamma_1-\gamma_2)/\omega$", r"$\gamma_2/\omega$"
    else:
        x_vals, y_vals = np.round(g2, 9), np.round(g1, 9)
        x_label, y_label = r"$\gamma_2/\omega$", r"$\gamma_1/\omega$"
    rows = np.unique(y_vals)
    cols = np.unique(x_vals)
    grid = _pivot((y_vals, x_vals), rows, cols, data["duration"])
    n_zero = int((grid == 0.0).sum())

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 5.2))
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_under(_ZERO_COLOR)
        top = float(grid.max()) if grid.max() > 0 else 1.0
        mesh = ax.pcolormesh(
            cols,
            rows,
            grid,
            cmap=cmap,
            norm=colors.Normalize(vmin=1e-9, vmax=top),
            shading="nearest",
        )
        fig.colorbar(mesh, ax=ax, label="first-window duration (1/$\\omega$)")
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        if not diff_axes:
            ax.set_xscale("log")
            ax.set_yscale("log")
        _save(fig, Path(out_path))
    return RenderResult(path=Path(out_path), n_zero_cells=n_zero)


def render_diode_overlay(
    forward_csv: Path | str, reverse_csv: Path | str, out_path: Path | str
) -> RenderResult:
    fwd = read_table(forward_csv, SIMULATE_REQUIRED)
    rev = read_table(reverse_csv, SIMULATE_REQUIRED)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(fwd["t"], fwd["J1"], color="#2b83ba", label=r"forward $J_1$")
        ax.plot(
            fwd["t"], fwd["J2"], color="#2b83ba", ls="--", label=r"forward $J_2$"
        )
        ax.plot(rev["t"], rev["J1"], color="#d7191c", label=r"reversed $J_1$")
        ax.plot(
            rev["t"], rev["J2"], color="#d7191c", ls="--", label=r"reversed $J_2$"
        )
        ax.axhline(0.0, color="black", lw=0.8, alpha=0.5)
        ax.set_xlabel(r"$\omega t$")
        ax.set_ylabel(r"bath currents ($\omega^2$)")
        ax.legend(loc="upper right")
        _save(fig, Path(out_path))
    return RenderResult(path=Path(out_path))
