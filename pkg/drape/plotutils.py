#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Static plots of energy traces and tracking errors."""

import logging
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

logger = logging.getLogger(__name__)

__all__ = ["plot_energy_trace", "plot_frame_errors", "save_track_plots"]

TERM_COLUMNS = {"smooth": "smoothness", "corr": "correspondence", "depth": "depth", "bound": "boundary"}


def plot_energy_trace(energy, ax=None):
    """Plot the converged energy of every frame, split by term.

    Parameters
    ----------
    energy : DataFrame
        The trace in the `energy.csv` layout.
    ax : matplotlib.axes.Axes, optional
        Axis to draw on; a new figure is created when omitted.

    Returns
    -------
    fig, ax
    """
    if ax is None:
        fig, ax = plt.subplots(1, 1)
    else:
        fig = ax.figure

    if len(energy) == 0:
        logger.warning("Empty energy trace; nothing to plot.")
        return fig, ax

    final = energy.sort_values(["frame", "iter"]).groupby("frame").last()
    colors = sns.color_palette("colorblind", len(TERM_COLUMNS) + 1)
    for color, (column, label) in zip(colors, TERM_COLUMNS.items()):
        ax.plot(final.index, final[column], label=label, color=color)
    ax.plot(final.index, final["total"], label="total", color=colors[-1], ls="--")

    ax.set(xlabel="frame", ylabel="energy at convergence")
    if (final[list(TERM_COLUMNS) + ["total"]].to_numpy() > 0).any():
        ax.set_yscale("symlog", linthresh=1e-3)
    ax.legend(loc="best", fontsize="small")
    sns.despine(ax=ax)
    return fig, ax


def plot_frame_errors(metrics, ax=None, spacing=None):
    """Plot per-frame RMSE (and boundary/visible RMSE when present).

    Parameters
    ----------
    metrics : DataFrame
        Table from `evaluate_sequence` (the `mean` row is ignored).
    ax : matplotlib.axes.Axes, optional
    spacing : float, optional
        Draw a reference line at half a mesh spacing.

    Returns
    -------
    fig, ax
    """
    if ax is None:
        fig, ax = plt.subplots(1, 1)
    else:
        fig = ax.figure

    per_frame = metrics[metrics["frame"].astype(str) != "mean"]
    frames = per_frame["frame"].astype(int).to_numpy()
    for column in ("rmse", "boundary_rmse", "visible_rmse"):
        if column in per_frame and np.isfinite(per_frame[column].to_numpy(dtype=float)).any():
            ax.plot(frames, per_frame[column].to_numpy(dtype=float), label=column.replace("_", " "))
    if spacing is not None:
        ax.axhline(0.5 * spacing, color="0.5", ls=":", label="half spacing")

    ax.set(xlabel="frame", ylabel="vertex error")
    ax.legend(loc="best", fontsize="small")
    sns.despine(ax=ax)
    return fig, ax


def save_track_plots(track_dir, metrics_file=None, plot_dir=None):
    """Write energy.png (and errors.png when metrics are given) for a tracking run.

    Returns
    -------
    list of Path
        The files written.
    """
    track_dir = Path(track_dir)
    plot_dir = Path(plot_dir) if plot_dir is not None else track_dir
    plot_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, _ = plot_energy_trace(pd.read_csv(track_dir / "energy.csv"))
    written.append(plot_dir / "energy.png")
    fig.savefig(written[-1], bbox_inches="tight")
    plt.close(fig)

    if metrics_file is not None:
        fig, _ = plot_frame_errors(pd.read_csv(metrics_file, dtype={"frame": str}))
        written.append(plot_dir / "errors.png")
        fig.savefig(written[-1], bbox_inches="tight")
        plt.close(fig)

    for fname in written:
        logger.info(f"Saved {fname}")
    return written
