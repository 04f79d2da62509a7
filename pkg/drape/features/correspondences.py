#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Correspondences between the canonical mesh and observed 3D points."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import OutsideMesh, SingularTriangle
from ..mesh.mesh import BarycentricAttachment, attachment_matrix, barycentric_coords, transform_point
from ..rgbd.frame import sample_depth_many
from .detect import HessianBlobDetector, detect, keypoint_positions
from .match import putative_match

logger = logging.getLogger(__name__)

__all__ = [
    "CSV_COLUMNS",
    "Correspondence",
    "CorrespondenceSet",
    "build_correspondences",
    "correspondences_from_table",
    "correspondence_table",
    "read_correspondence_csv",
    "write_correspondence_csv",
    "FeatureTracker",
]

CSV_COLUMNS = ["frame", "cx", "cy", "cz", "ox", "oy", "oz"]


@dataclass(frozen=True, eq=False)
class Correspondence:
    """A canonical point attached to the mesh, paired with its observation."""

    canonical_point: np.ndarray
    attachment: BarycentricAttachment
    observed_point: np.ndarray
    descriptor_distance: float = 0.0


class CorrespondenceSet:
    """Array view of a frame's correspondences, as consumed by the energy.

    Parameters
    ----------
    correspondences : sequence of Correspondence
    n_vertices : int
        Number of mesh vertices (columns of the attachment matrix).
    """

    def __init__(self, correspondences: Sequence[Correspondence], n_vertices: int):
        self.correspondences = list(correspondences)
        self.n_vertices = int(n_vertices)
        self.canonical = np.array([c.canonical_point for c in self.correspondences], dtype=float).reshape(-1, 3)
        self.observed = np.array([c.observed_point for c in self.correspondences], dtype=float).reshape(-1, 3)
        self.attachments = [c.attachment for c in self.correspondences]
        self.B = attachment_matrix(self.attachments, self.n_vertices)

    @classmethod
    def empty(cls, n_vertices):
        return cls([], n_vertices)

    def __len__(self):
        return len(self.correspondences)

    def __iter__(self):
        return iter(self.correspondences)

    def predicted(self, state):
        """T_V of every canonical point under `state`, as an (m, 3) array."""
        return np.column_stack((self.B @ state.X, self.B @ state.Y, self.B @ state.Z))


def _attach(point, mesh):
    try:
        return barycentric_coords(point, mesh)
    except (OutsideMesh, SingularTriangle):
        return None


def build_correspondences(matches, canonical_keypoints, current_keypoints, mesh, canonical_frame, frame):
    """Lift matched keypoints to 3D and attach the canonical ends to the mesh.

    Matches are dropped when the canonical point falls outside the mesh or
    either end has no valid depth.

    Parameters
    ----------
    matches : list of Match
    canonical_keypoints, current_keypoints : list of Keypoint
    mesh : CanonicalMesh
    canonical_frame : RgbdFrame
        Frame the canonical keypoints were detected on.
    frame : RgbdFrame
        Current frame.

    Returns
    -------
    correspondences : list of Correspondence
    dropped : int
    """
    if not matches:
        return [], 0
    ci = [m.canonical for m in matches]
    ji = [m.current for m in matches]
    cxy = keypoint_positions([canonical_keypoints[i] for i in ci])
    oxy = keypoint_positions([current_keypoints[j] for j in ji])
    cz = sample_depth_many(canonical_frame, cxy[:, 0], cxy[:, 1])
    oz = sample_depth_many(frame, oxy[:, 0], oxy[:, 1])

    result = []
    for k, m in enumerate(matches):
        if not (np.isfinite(cz[k]) and np.isfinite(oz[k])):
            continue
        canonical_point = np.array([cxy[k, 0], cxy[k, 1], cz[k]])
        attachment = _attach(canonical_point, mesh)
        if attachment is None:
            continue
        result.append(Correspondence(canonical_point, attachment, np.array([oxy[k, 0], oxy[k, 1], oz[k]]), m.distance))

    dropped = len(matches) - len(result)
    if dropped:
        logger.warning(f"Dropped {dropped} of {len(matches)} matches (outside mesh or invalid depth).")
    return result, dropped


def correspondences_from_table(table, mesh):
    """Attach the canonical points of a correspondence table to the mesh.

    Parameters
    ----------
    table : DataFrame
        Columns cx, cy, cz, ox, oy, oz.
    mesh : CanonicalMesh

    Returns
    -------
    correspondences : list of Correspondence
    dropped : int
        Rows whose canonical point lies outside the mesh.
    """
    canonical = table[["cx", "cy", "cz"]].to_numpy(dtype=float)
    observed = table[["ox", "oy", "oz"]].to_numpy(dtype=float)
    result = []
    for c, o in zip(canonical, observed):
        attachment = _attach(c, mesh)
        if attachment is not None:
            result.append(Correspondence(c, attachment, o))
    dropped = len(table) - len(result)
    if dropped:
        logger.warning(f"Dropped {dropped} of {len(table)} tabulated correspondences outside the mesh.")
    return result, dropped


def correspondence_table(frame_index, canonical, observed):
    """DataFrame in the correspondence CSV layout."""
    canonical = np.asarray(canonical, dtype=float).reshape(-1, 3)
    observed = np.asarray(observed, dtype=float).reshape(-1, 3)
    df = pd.DataFrame(np.hstack((canonical, observed)), columns=CSV_COLUMNS[1:])
    df.insert(0, "frame", np.full(len(df), int(frame_index), dtype=int))
    return df


def read_correspondence_csv(fname):
    df = pd.read_csv(fname)
    missing = set(CSV_COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"{fname}: missing columns {sorted(missing)}.")
    return df[CSV_COLUMNS]


def write_correspondence_csv(fname, table):
    table[CSV_COLUMNS].to_csv(fname, index=False, float_format="%.6f")


class FeatureTracker:
    """Match a frame's keypoints against the canonical frame's.

    Canonical keypoints remember where they were last matched; features never
    matched so far are looked for around their canonical attachment carried
    through the previous mesh estimate.

    Parameters
    ----------
    mesh : CanonicalMesh
    canonical_frame : RgbdFrame
    canonical_seg : Segmentation
    detector : Detector, optional
    gate : float, optional
        Match radius in pixels; defaults to 3 mesh spacings.
    """

    def __init__(self, mesh, canonical_frame, canonical_seg, detector=None, gate=None):
        self.mesh = mesh
        self.canonical_frame = canonical_frame
        self.detector = detector or HessianBlobDetector()
        self.gate = 3.0 * mesh.spacing if gate is None else float(gate)
        self.keypoints = detect(canonical_frame, canonical_seg, self.detector)
        self.attachments: List[Optional[BarycentricAttachment]] = [
            _attach((kp.x, kp.y), mesh) for kp in self.keypoints
        ]
        self.last_positions = {}
        logger.info(f"Tracking {len(self.keypoints)} canonical keypoints.")

    def previous_positions(self, state):
        positions = keypoint_positions(self.keypoints)
        for i, attachment in enumerate(self.attachments):
            if i in self.last_positions:
                positions[i] = self.last_positions[i]
            elif attachment is not None:
                positions[i] = transform_point(attachment, state)[:2]
        return positions

    def correspondences(self, frame, seg, state):
        """Correspondences for `frame`, gated around positions under `state`.

        Returns
        -------
        CorrespondenceSet
        dropped : int
        """
        current = detect(frame, seg, self.detector)
        matches = putative_match(self.keypoints, current, self.previous_positions(state), self.gate)
        for m in matches:
            self.last_positions[m.canonical] = current[m.current].position
        found, dropped = build_correspondences(matches, self.keypoints, current, self.mesh, self.canonical_frame, frame)
        return CorrespondenceSet(found, self.mesh.n), dropped
