#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The tracking energy: smoothness, correspondence, depth and boundary terms.

Every term has a value function (`psi_*`) and a gradient function (`grad_*`)
returning one vector per axis. The depth and boundary terms depend on targets
looked up at the current vertex positions (`depth_targets`,
`boundary_targets`); passing precomputed targets freezes them, which is how
the solver treats the data terms explicitly.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .rgbd.frame import bilinear_sample, estimate_depth_noise
from .rgbd.segment import nearest_boundary_points

logger = logging.getLogger(__name__)

__all__ = [
    "EnergyParams",
    "EnergyBreakdown",
    "FrameInputs",
    "DataTargets",
    "resolve_occlusion_threshold",
    "psi_smoothness",
    "grad_smoothness",
    "psi_correspondence",
    "grad_correspondence",
    "depth_targets",
    "psi_depth",
    "grad_depth",
    "boundary_targets",
    "psi_boundary",
    "grad_boundary",
    "canonical_boundary_offsets",
    "psi_boundary_scalar",
    "data_targets",
    "psi_total",
]

OCCLUSION_NOISE_FACTOR = 15.0
MIN_OCCLUSION_THRESHOLD = 20.0


@dataclass(frozen=True)
class EnergyParams:
    """Term weights and solver step control.

    Attributes
    ----------
    lambda_c, lambda_d, lambda_b : float
        Weights of the correspondence, depth and boundary terms.
    alpha : float
        Adaptation rate of the semi-implicit update (> 0).
    occlusion_threshold : float or None
        Depth residuals larger than this are ignored; None estimates it per
        frame from the depth noise.
    boundary_gate : float
        Boundary targets farther than this many mesh spacings are ignored.
    """

    lambda_c: float = 1.3
    lambda_d: float = 0.6
    lambda_b: float = 0.8
    alpha: float = 10.0
    occlusion_threshold: Optional[float] = None
    boundary_gate: float = 3.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive (got {self.alpha}).")
        for name in ("lambda_c", "lambda_d", "lambda_b"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative (got {getattr(self, name)}).")
        if self.occlusion_threshold is not None and not self.occlusion_threshold > 0:
            raise ValueError("occlusion_threshold must be positive.")
        if not self.boundary_gate > 0:
            raise ValueError("boundary_gate must be positive.")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class EnergyBreakdown:
    smoothness: float
    correspondence: float
    depth: float
    boundary: float
    total: float

    @classmethod
    def combine(cls, smoothness, correspondence, depth, boundary, params):
        total = smoothness + params.lambda_c * correspondence + params.lambda_d * depth + params.lambda_b * boundary
        return cls(float(smoothness), float(correspondence), float(depth), float(boundary), float(total))


@dataclass
class FrameInputs:
    """Everything the data terms need about one frame.

    Attributes
    ----------
    frame : RgbdFrame or None
    segmentation : Segmentation or None
    correspondences : CorrespondenceSet or None
    occlusion_threshold : float
    """

    frame: Optional[object] = None
    segmentation: Optional[object] = None
    correspondences: Optional[object] = None
    occlusion_threshold: float = np.inf

    @classmethod
    def prepare(cls, frame, segmentation, correspondences, params):
        threshold = resolve_occlusion_threshold(frame, segmentation, params)
        return cls(frame, segmentation, correspondences, threshold)


def resolve_occlusion_threshold(frame, segmentation, params):
    """The configured occlusion threshold, or max(15 sigma, 20) from the frame's noise."""
    if params.occlusion_threshold is not None:
        return float(params.occlusion_threshold)
    if frame is None:
        return np.inf
    mask = None if segmentation is None else segmentation.foreground
    sigma = estimate_depth_noise(frame, mask)
    threshold = max(OCCLUSION_NOISE_FACTOR * sigma, MIN_OCCLUSION_THRESHOLD)
    logger.debug(f"Depth noise {sigma:.3f}, occlusion threshold {threshold:.3f}.")
    return threshold


# ---------------------------------------------------------------- smoothness


def psi_smoothness(state, K, K_col=None):
    """1/2 (X'KX + Y'KY + Z'KZ), or 1/2 |K_col V|^2 when the triplet matrix is given."""
    if K_col is not None:
        return 0.5 * sum(float(np.sum(np.square(K_col @ axis))) for axis in (state.X, state.Y, state.Z))
    total = 0.0
    for axis in (state.X, state.Y, state.Z):
        # K has zero row sums, so centring each axis leaves the value unchanged
        centred = axis - axis.mean()
        total += float(centred @ (K @ centred))
    return 0.5 * total


def grad_smoothness(state, K):
    return K @ state.X, K @ state.Y, K @ state.Z


# ------------------------------------------------------------ correspondence


def _correspondence_residuals(state, correspondences):
    return correspondences.observed - correspondences.predicted(state)


def psi_correspondence(state, correspondences):
    """Half the summed squared distance between observed and transformed canonical points."""
    if correspondences is None or len(correspondences) == 0:
        return 0.0
    r = _correspondence_residuals(state, correspondences)
    return 0.5 * float(np.sum(r * r))


def grad_correspondence(state, correspondences):
    """-B'(c - BV) per axis."""
    if correspondences is None or len(correspondences) == 0:
        zero = np.zeros(state.n)
        return zero, zero.copy(), zero.copy()
    r = _correspondence_residuals(state, correspondences)
    g = -(correspondences.B.T @ r)
    return g[:, 0], g[:, 1], g[:, 2]


# --------------------------------------------------------------------- depth


def depth_targets(state, frame, seg=None, occlusion_threshold=np.inf):
    """Depth under every vertex and whether it takes part in the depth term.

    Vertices outside the image, over invalid (or, with `seg`, background)
    depth, or farther than `occlusion_threshold` from their sample are
    inactive.

    Returns
    -------
    depth : ndarray
        (n,) sampled depth, NaN where unavailable.
    active : ndarray
        (n,) boolean.
    """
    valid = frame.validity if seg is None else frame.validity & seg.foreground
    d = bilinear_sample(frame.depth, valid, state.X, state.Y)
    with np.errstate(invalid="ignore"):
        active = np.isfinite(d) & (np.abs(d - state.Z) <= occlusion_threshold)
    return d, active


def _depth_residual(state, targets):
    d, active = targets
    return np.where(active, d - state.Z, 0.0)


def psi_depth(state, frame, seg=None, occlusion_threshold=np.inf, targets=None):
    """1/2 sum |d(x_i, y_i) - z_i|^2 over active vertices."""
    if targets is None:
        targets = depth_targets(state, frame, seg, occlusion_threshold)
    r = _depth_residual(state, targets)
    return 0.5 * float(r @ r)


def grad_depth(state, frame, seg=None, occlusion_threshold=np.inf, targets=None):
    """Gradient with respect to Z: -(d - z) on active vertices."""
    if targets is None:
        targets = depth_targets(state, frame, seg, occlusion_threshold)
    return -_depth_residual(state, targets)


# ------------------------------------------------------------------ boundary


def boundary_targets(state, mesh, seg, gate=np.inf):
    """Nearest current-frame boundary point of every boundary vertex.

    Returns
    -------
    targets : ndarray
        (nb, 3) target points, rows aligned with `mesh.boundary`.
    active : ndarray
        (nb,) boolean; False outside the image, with no valid boundary depth,
        or when the target is farther than `gate`.
    """
    idx = mesh.boundary
    points = np.column_stack((state.X[idx], state.Y[idx], state.Z[idx]))
    targets = nearest_boundary_points(seg, points[:, 0], points[:, 1])
    active = np.all(np.isfinite(targets), axis=1)
    if np.isfinite(gate):
        with np.errstate(invalid="ignore"):
            active &= np.linalg.norm(targets - points, axis=1) <= gate
    return targets, active


def _boundary_residual(state, mesh, targets):
    tgt, active = targets
    idx = mesh.boundary
    r = tgt - np.column_stack((state.X[idx], state.Y[idx], state.Z[idx]))
    r[~active] = 0.0
    return r


def psi_boundary(state, mesh, seg, gate=np.inf, targets=None):
    """1/2 sum ||b(v_i) - v_i||^2 over boundary vertices."""
    if targets is None:
        targets = boundary_targets(state, mesh, seg, gate)
    r = _boundary_residual(state, mesh, targets)
    return 0.5 * float(np.sum(r * r))


def grad_boundary(state, mesh, seg, gate=np.inf, targets=None):
    if targets is None:
        targets = boundary_targets(state, mesh, seg, gate)
    r = _boundary_residual(state, mesh, targets)
    g = np.zeros((state.n, 3))
    g[mesh.boundary] = -r
    return g[:, 0], g[:, 1], g[:, 2]


def canonical_boundary_offsets(mesh, canonical_seg):
    """Distance from each canonical boundary vertex to the nearest canonical boundary point."""
    pts = mesh.vertices[mesh.boundary]
    return np.linalg.norm(nearest_boundary_points(canonical_seg, pts[:, 0], pts[:, 1]) - pts, axis=1)


def psi_boundary_scalar(state, mesh, seg, canonical_seg):
    """Half the squared change of each boundary vertex's distance to the silhouette.

    Compares the distance from v_i to the current boundary with the distance
    from the canonical vertex to the canonical boundary. Diagnostic only.
    """
    reference = canonical_boundary_offsets(mesh, canonical_seg)
    idx = mesh.boundary
    pts = np.column_stack((state.X[idx], state.Y[idx], state.Z[idx]))
    current = np.linalg.norm(nearest_boundary_points(seg, pts[:, 0], pts[:, 1]) - pts, axis=1)
    ok = np.isfinite(reference) & np.isfinite(current)
    return 0.5 * float(np.sum((reference[ok] - current[ok]) ** 2))


# --------------------------------------------------------------------- total


class DataTargets(NamedTuple):
    depth: Optional[tuple]
    boundary: Optional[tuple]


def data_targets(state, mesh, inputs, params):
    """Depth and boundary targets at `state`; None for terms without input."""
    depth = None
    boundary = None
    if inputs.frame is not None:
        depth = depth_targets(state, inputs.frame, inputs.segmentation, inputs.occlusion_threshold)
    if inputs.segmentation is not None:
        boundary = boundary_targets(state, mesh, inputs.segmentation, params.boundary_gate * mesh.spacing)
    return DataTargets(depth, boundary)


def psi_total(state, mesh, inputs, params, targets=None):
    """Evaluate all four terms and their weighted sum.

    Parameters
    ----------
    state : MeshState
    mesh : CanonicalMesh
    inputs : FrameInputs
        Missing frame or segmentation zero the depth or boundary term.
    params : EnergyParams
    targets : DataTargets, optional
        Frozen data targets; computed at `state` when omitted.

    Returns
    -------
    EnergyBreakdown
    """
    if targets is None:
        targets = data_targets(state, mesh, inputs, params)
    smooth = psi_smoothness(state, mesh.K, mesh.K_col)
    corr = psi_correspondence(state, inputs.correspondences)
    depth = 0.0 if targets.depth is None else psi_depth(state, inputs.frame, targets=targets.depth)
    bound = 0.0
    if targets.boundary is not None:
        bound = psi_boundary(state, mesh, inputs.segmentation, targets=targets.boundary)
    return EnergyBreakdown.combine(smooth, corr, depth, bound, params)
