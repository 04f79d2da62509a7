#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Closed-form ground-truth deformations of a flat sheet."""

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import UnknownKind
from ..mesh.mesh import MeshState

logger = logging.getLogger(__name__)

__all__ = ["KINDS", "Extent", "DeformationModel", "progress", "deform_points", "deform"]

KINDS = ("translate", "slant", "cylinderBend", "outOfPlaneRotate", "foldOcclude")


@dataclass(frozen=True)
class Extent:
    """Footprint of the canonical sheet: column range, row range and resting depth."""

    x0: float
    x1: float
    y0: float
    y1: float
    z0: float

    @classmethod
    def from_mesh(cls, mesh):
        x0, x1, y0, y1 = mesh.extent()
        return cls(x0, x1, y0, y1, float(np.median(mesh.vertices[:, 2])))

    @property
    def xc(self):
        return 0.5 * (self.x0 + self.x1)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class DeformationModel:
    """A deformation kind with its parameters, evaluated at frames 0..frames-1.

    Parameters per kind (angles in degrees):

    ``translate``
        step: (dx, dy, dz) per frame. (default: (2, 0, 0))
    ``slant``
        theta_max: final tilt (default: 45); axis: "bottom" rotates about the
        bottom edge, "left" about the left edge. The far side tilts away.
    ``cylinderBend``
        phi_max: slope angle of the surface at the side edges in the last frame
        (default: 60, at most 90). The side edges stay put and the middle
        bulges toward the camera over a cylinder whose radius shrinks with t;
        image positions are kept.
    ``outOfPlaneRotate``
        theta_max: rotation about the vertical centre line. (default: 60)
    ``foldOcclude``
        phi_max: fold angle of the part below the crease (default: 120);
        crease: crease height as a fraction of the sheet from the top. (default: 2/3)
    """

    kind: str
    frames: int
    extent: Extent
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownKind(f"Unknown deformation kind {self.kind!r}; expected one of {KINDS}.")
        if self.frames < 1:
            raise ValueError("A deformation needs at least one frame.")


def progress(t, frames):
    """Fraction t / (frames - 1) of the full deformation reached at frame t."""
    return 0.0 if frames <= 1 else t / (frames - 1)


def _rotate(u, w, angle):
    c, s = np.cos(angle), np.sin(angle)
    return c * u - s * w, s * u + c * w


def deform_points(model, points, t):
    """Apply the deformation at frame t to (k, 3) canonical points."""
    if not 0 <= t < model.frames:
        raise ValueError(f"Frame {t} outside [0, {model.frames}).")
    points = np.array(points, dtype=float).reshape(-1, 3)
    s = progress(t, model.frames)
    kind, p, e = model.kind, model.params, model.extent
    if kind == "translate":
        return points + t * np.asarray(p.get("step", (2.0, 0.0, 0.0)), dtype=float)
    if s == 0:
        return points

    out = points.copy()
    x, y, z = points[:, 0], points[:, 1], points[:, 2]

    if kind == "slant":
        theta = np.radians(p.get("theta_max", 45.0)) * s
        axis = p.get("axis", "bottom")
        if axis == "bottom":
            # rows above the pivot (negative offset) move away from the camera
            dy, dz = _rotate(y - e.y1, z - e.z0, -theta)
            out[:, 1], out[:, 2] = e.y1 + dy, e.z0 + dz
        elif axis == "left":
            dx, dz = _rotate(x - e.x0, z - e.z0, theta)
            out[:, 0], out[:, 2] = e.x0 + dx, e.z0 + dz
        else:
            raise ValueError(f"Unknown slant axis {axis!r}.")

    elif kind == "cylinderBend":
        phi_max = p.get("phi_max", 60.0)
        if not 0 < phi_max <= 90:
            raise ValueError(f"phi_max must lie in (0, 90] (got {phi_max}).")
        phi = np.radians(phi_max) * s
        radius = 0.5 * (e.x1 - e.x0) / np.sin(phi)
        u = np.clip(x - e.xc, -radius, radius)
        out[:, 2] = z - (np.sqrt(radius**2 - u**2) - radius * np.cos(phi))

    elif kind == "outOfPlaneRotate":
        theta = np.radians(p.get("theta_max", 60.0)) * s
        dx, dz = _rotate(x - e.xc, z - e.z0, theta)
        out[:, 0], out[:, 2] = e.xc + dx, e.z0 + dz

    elif kind == "foldOcclude":
        phi = np.radians(p.get("phi_max", 120.0)) * s
        crease = e.y0 + p.get("crease", 2.0 / 3.0) * (e.y1 - e.y0)
        below = y > crease
        # the flap swings toward the camera and up over the sheet
        dy, dz = _rotate(y[below] - crease, z[below] - e.z0, -phi)
        out[below, 1], out[below, 2] = crease + dy, e.z0 + dz

    return out


def deform(model, mesh, t):
    """Ground-truth MeshState of `mesh` at frame t."""
    return MeshState.from_vertices(deform_points(model, mesh.vertices, t))
