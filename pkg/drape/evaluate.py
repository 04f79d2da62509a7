#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Compare estimated mesh sequences with ground truth."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import CountMismatch
from .mesh.io import read_obj, vertex_degrees
from .rgbd.frame import sample_depth_many
from .rgbd.io import load_frame

logger = logging.getLogger(__name__)

__all__ = [
    "METRIC_COLUMNS",
    "vertex_errors",
    "rmse",
    "frame_metrics",
    "visible_vertices",
    "evaluate_sequence",
    "write_metrics",
]

METRIC_COLUMNS = ["frame", "rmse", "max_error", "boundary_rmse", "visible_rmse"]
VISIBILITY_TOL = 10.0


def vertex_errors(estimated, truth):
    """Euclidean distance between index-matched vertices."""
    estimated = np.asarray(estimated, dtype=float).reshape(-1, 3)
    truth = np.asarray(truth, dtype=float).reshape(-1, 3)
    if estimated.shape != truth.shape:
        raise CountMismatch(f"{estimated.shape[0]} estimated vertices vs {truth.shape[0]} ground-truth vertices.")
    return np.linalg.norm(estimated - truth, axis=1)


def rmse(errors):
    errors = np.asarray(errors, dtype=float)
    return float(np.sqrt(np.mean(errors ** 2))) if errors.size else np.nan


def frame_metrics(estimated, truth, boundary=None, visible=None):
    """RMSE and maximum vertex error of one frame.

    Parameters
    ----------
    estimated, truth : array_like
        (n, 3) vertex positions.
    boundary : array_like, optional
        Indices of boundary vertices.
    visible : array_like, optional
        (n,) boolean visibility of the ground-truth vertices.

    Returns
    -------
    dict
    """
    err = vertex_errors(estimated, truth)
    return dict(
        rmse=rmse(err),
        max_error=float(err.max()) if err.size else np.nan,
        boundary_rmse=np.nan if boundary is None else rmse(err[np.asarray(boundary, dtype=np.intp)]),
        visible_rmse=np.nan if visible is None else rmse(err[np.asarray(visible, dtype=bool)]),
    )


def _listing(directory, prefix):
    return sorted(Path(directory).glob(f"{prefix}_*.obj"))


def visible_vertices(frame, vertices, tol=VISIBILITY_TOL):
    """Vertices not covered by an observed surface more than `tol` nearer to the camera.

    Vertices with no valid depth under them (silhouette tips, dropout) count
    as visible.
    """
    vertices = np.asarray(vertices, dtype=float)
    d = sample_depth_many(frame, vertices[:, 0], vertices[:, 1])
    with np.errstate(invalid="ignore"):
        return ~(d < vertices[:, 2] - tol)


def evaluate_sequence(est_dir, truth_dir, sequence=None, visibility_tol=VISIBILITY_TOL):
    """Per-frame error table of an estimated sequence against ground truth.

    Parameters
    ----------
    est_dir : str or Path
        Directory with `est_%05d.obj`.
    truth_dir : str or Path
        Directory with `truth_%05d.obj`.
    sequence : str or Path, optional
        Sequence directory; enables the visible-vertex RMSE.
    visibility_tol : float
        Depth agreement for a ground-truth vertex to count as visible.

    Returns
    -------
    DataFrame
        One row per frame and a final `mean` row.
    """
    estimated = _listing(est_dir, "est")
    truths = _listing(truth_dir, "truth")
    if len(estimated) != len(truths):
        raise CountMismatch(f"{len(estimated)} estimated frames vs {len(truths)} ground-truth frames.")
    if not truths:
        raise CountMismatch("No frames to evaluate.")

    rows = []
    for t, (est_file, truth_file) in enumerate(zip(estimated, truths)):
        est, _ = read_obj(est_file)
        truth, triangles = read_obj(truth_file)
        boundary = np.flatnonzero(vertex_degrees(triangles, truth.shape[0]) != 6)
        visible = None
        if sequence is not None:
            visible = visible_vertices(load_frame(sequence, t), truth, visibility_tol)
        rows.append(dict(frame=str(t), **frame_metrics(est, truth, boundary, visible)))

    metrics = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    mean = metrics[METRIC_COLUMNS[1:]].mean(axis=0)
    metrics.loc[len(metrics)] = ["mean"] + [mean[c] for c in METRIC_COLUMNS[1:]]
    if sequence is None:
        metrics = metrics.drop(columns="visible_rmse")
    logger.info(f"Evaluated {len(rows)} frames: mean RMSE {mean['rmse']:.4f}")
    return metrics


def write_metrics(metrics, fname):
    metrics.to_csv(fname, index=False, float_format="%.6f")
