#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Track a surface through an RGBD sequence."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List

import pandas as pd
from tqdm import tqdm

from .energy import FrameInputs
from .errors import ConfigError
from .features.correspondences import (
    CorrespondenceSet,
    FeatureTracker,
    correspondences_from_table,
    read_correspondence_csv,
)
from .mesh.io import write_obj
from .mesh.mesh import MeshState, build_canonical_mesh
from .rgbd.io import MANIFEST_NAME, count_frames, load_frame, read_manifest
from .rgbd.segment import segment_foreground
from .solver import prefactor, solve_frame

logger = logging.getLogger(__name__)

__all__ = ["ENERGY_COLUMNS", "TrackResult", "track_sequence", "energy_table"]

ENERGY_COLUMNS = ["frame", "iter", "smooth", "corr", "depth", "bound", "total"]
ESTIMATE_TEMPLATE = "est_%05d.obj"
CORRESPONDENCE_TEMPLATE = "corr_%05d.csv"


@dataclass
class TrackResult:
    mesh: object
    states: List[MeshState]
    energy: pd.DataFrame


def energy_table(frame_index, trace):
    """Rows of the energy trace CSV for one frame."""
    return pd.DataFrame(
        [(frame_index, i, e.smoothness, e.correspondence, e.depth, e.boundary, e.total) for i, e in enumerate(trace)],
        columns=ENERGY_COLUMNS,
    )


def _depth_band(config, seq_dir):
    z_near, z_far = config.z_near, config.z_far
    if z_near is None or z_far is None:
        manifest = read_manifest(seq_dir) if (Path(seq_dir) / MANIFEST_NAME).exists() else {}
        z_near = manifest.get("z_near") if z_near is None else z_near
        z_far = manifest.get("z_far") if z_far is None else z_far
    if z_near is None or z_far is None:
        raise ConfigError("No depth band: set z_near and z_far or provide them in the sequence manifest.")
    return float(z_near), float(z_far)


def _tabulated_correspondences(seq_dir, index, mesh):
    fname = Path(seq_dir) / (CORRESPONDENCE_TEMPLATE % index)
    if not fname.exists():
        logger.warning(f"No correspondence file {fname}; tracking frame {index} without correspondences.")
        return CorrespondenceSet.empty(mesh.n)
    found, _ = correspondences_from_table(read_correspondence_csv(fname), mesh)
    return CorrespondenceSet(found, mesh.n)


def track_sequence(config, write=True):
    """Track the surface through every frame of `config.sequence`.

    Frame 0 defines the canonical mesh; each later frame is solved starting
    from the previous frame's estimate.

    Parameters
    ----------
    config : RunConfig
    write : bool
        Write `est_%05d.obj` meshes and `energy.csv` to `config.output_dir`.

    Returns
    -------
    TrackResult
    """
    seq_dir = Path(config.sequence)
    z_near, z_far = _depth_band(config, seq_dir)
    n_frames = count_frames(seq_dir)
    if n_frames == 0:
        raise FileNotFoundError(f"No frames found in {seq_dir}.")
    solver_config = config.solver_config()
    params = solver_config.params

    frame0 = load_frame(seq_dir, 0)
    seg0 = segment_foreground(frame0, z_near, z_far, fill_holes=config.fill_holes)
    mesh = build_canonical_mesh(seg0.foreground, frame0.depth, config.spacing, valid=frame0.validity)
    system = prefactor(mesh.K, params.alpha)

    tracker = None
    if config.correspondences == "detector":
        tracker = FeatureTracker(mesh, frame0, seg0, gate=config.match_gate * mesh.spacing)

    out_dir = config.output_dir
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_obj(out_dir / (ESTIMATE_TEMPLATE % 0), mesh.vertices, mesh.triangles)

    states = [mesh.state()]
    tables = []
    for t in tqdm(range(1, n_frames), desc="Tracking", disable=None):
        frame = load_frame(seq_dir, t)
        seg = segment_foreground(frame, z_near, z_far, fill_holes=config.fill_holes)
        if config.correspondences == "csv":
            corr = _tabulated_correspondences(seq_dir, t, mesh)
        elif tracker is not None:
            corr, _ = tracker.correspondences(frame, seg, states[-1])
        else:
            corr = CorrespondenceSet.empty(mesh.n)

        inputs = FrameInputs.prepare(frame, seg, corr, params)
        state, trace = solve_frame(states[-1], mesh, inputs, solver_config, system)
        logger.info(
            f"Frame {t}: {len(corr)} correspondences, {len(trace) - 1} iterations, "
            f"energy {trace[0].total:.4g} -> {trace[-1].total:.4g}"
        )
        states.append(state)
        tables.append(energy_table(t, trace))
        if write:
            write_obj(out_dir / (ESTIMATE_TEMPLATE % t), state.vertices, mesh.triangles)

    energy = pd.concat(tables, ignore_index=True) if tables else pd.DataFrame(columns=ENERGY_COLUMNS)
    if write:
        energy.to_csv(out_dir / "energy.csv", index=False, float_format="%.6f")
        logger.info(f"Wrote {len(states)} meshes and the energy trace to {out_dir}")
    return TrackResult(mesh, states, energy)
