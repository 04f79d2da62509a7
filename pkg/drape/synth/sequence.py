#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Synthetic RGBD sequences with exact ground truth."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np
from tqdm import tqdm

from ..errors import UnknownKind
from ..features.correspondences import CSV_COLUMNS, correspondence_table, write_correspondence_csv
from ..mesh.io import write_obj
from ..mesh.mesh import MeshState, build_canonical_mesh
from ..rgbd.frame import sample_depth_many
from ..rgbd.io import save_frame, write_manifest
from .deform import DeformationModel, Extent, deform, deform_points
from .render import add_depth_noise, make_texture, render

logger = logging.getLogger(__name__)

__all__ = [
    "SCENARIOS",
    "IMAGE_SIZE",
    "SyntheticSequence",
    "canonical_sheet",
    "plant_correspondences",
    "generate_sequence",
    "write_sequence",
]

IMAGE_SIZE = (200, 160)
FOOTPRINT = (52, 148, 44, 116)  # columns [52, 148), rows [44, 116)
SHEET_DEPTH = 800.0
Z_NEAR, Z_FAR = 500.0, 1100.0
SPACING = 10.0
PLANT_VISIBILITY_TOL = 1.0

SCENARIOS: Dict[str, dict] = {
    "static": dict(kind="translate", params=dict(step=(0.0, 0.0, 0.0)), frames=10, density=10.0),
    "translate": dict(kind="translate", params=dict(step=(2.0, 0.0, 0.0)), frames=10, density=10.0),
    "slant": dict(kind="slant", params=dict(theta_max=45.0, axis="bottom"), frames=20, density=10.0),
    "bend": dict(kind="cylinderBend", params=dict(phi_max=70.0), frames=20, density=2.0),
    "rotate": dict(kind="outOfPlaneRotate", params=dict(theta_max=60.0), frames=20, density=10.0),
    "fold": dict(kind="foldOcclude", params=dict(phi_max=120.0), frames=20, density=10.0),
    "textureless-rotate": dict(kind="outOfPlaneRotate", params=dict(theta_max=60.0), frames=20, density=0.0),
}


@dataclass
class SyntheticSequence:
    """A rendered sequence with its ground truth.

    Attributes
    ----------
    name : str
    mesh : CanonicalMesh
        The mesh that was deformed and rendered.
    model : DeformationModel
    frames : list of RgbdFrame
        Noisy, quantised observations.
    truth : list of MeshState
    correspondences : list of DataFrame
        Planted correspondences per frame, in the CSV layout.
    density : float
    seed : int
    """

    name: str
    mesh: object
    model: DeformationModel
    frames: List = field(default_factory=list)
    truth: List[MeshState] = field(default_factory=list)
    correspondences: List = field(default_factory=list)
    density: float = 0.0
    seed: int = 0
    z_near: float = Z_NEAR
    z_far: float = Z_FAR

    @property
    def image_size(self):
        return (self.frames[0].width, self.frames[0].height) if self.frames else IMAGE_SIZE


def canonical_sheet(image_size=IMAGE_SIZE, footprint=FOOTPRINT, depth=SHEET_DEPTH, spacing=SPACING):
    """Mesh of a fronto-parallel rectangular sheet."""
    width, height = image_size
    c0, c1, r0, r1 = footprint
    mask = np.zeros((height, width), dtype=bool)
    mask[r0:r1, c0:c1] = True
    return build_canonical_mesh(mask, np.full((height, width), depth), spacing)


def _sample_surface_points(mesh, count, rng):
    tri = rng.integers(0, mesh.triangles.shape[0], count)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    beta = np.column_stack((1.0 - r1, r1 * (1.0 - r2), r1 * r2))
    return np.einsum("ki,kij->kj", beta, mesh.vertices[mesh.triangles[tri]])


def plant_correspondences(model, mesh, density, t, seed=0, depth_frame=None, image_size=IMAGE_SIZE):
    """Ground-truth correspondences visible at frame t.

    Canonical points are drawn once per seed (uniform over the mesh, density
    points per 100x100 pixels of footprint) and mapped through the
    deformation; points hidden in the rendering are dropped.

    Parameters
    ----------
    model : DeformationModel
    mesh : CanonicalMesh
    density : float
    t : int
    seed : int
    depth_frame : RgbdFrame, optional
        Clean rendering at frame t used for the visibility test; rendered
        here when omitted.
    image_size : tuple of int

    Returns
    -------
    DataFrame
        Columns frame, cx, cy, cz, ox, oy, oz.
    """
    if density < 0:
        raise ValueError("density must be non-negative.")
    count = int(round(density * model.extent.area / 1e4))
    if count == 0:
        return correspondence_table(t, np.empty((0, 3)), np.empty((0, 3)))
    canonical = _sample_surface_points(mesh, count, np.random.default_rng([seed, 1]))
    observed = deform_points(model, canonical, t)
    if depth_frame is None:
        depth_frame = render(deform(model, mesh, t), mesh, None, image_size)
    d = sample_depth_many(depth_frame, observed[:, 0], observed[:, 1])
    with np.errstate(invalid="ignore"):
        visible = np.abs(d - observed[:, 2]) <= PLANT_VISIBILITY_TOL
    return correspondence_table(t, canonical[visible], observed[visible])


def generate_sequence(
    scenario, seed=0, frames=None, density=None, noise_sigma=2.0, dropout=0.01, image_size=IMAGE_SIZE, **params
):
    """Render a named scenario.

    Parameters
    ----------
    scenario : str
        Key of SCENARIOS.
    seed : int
        Seeds the texture, planted points and per-frame noise.
    frames, density : optional
        Override the scenario defaults.
    noise_sigma : float
        Standard deviation of the additive depth noise. (default: 2)
    dropout : float
        Fraction of valid depth pixels set invalid. (default: 0.01)
    image_size : tuple of int
    **params
        Override deformation parameters (e.g. theta_max, axis).

    Returns
    -------
    SyntheticSequence
    """
    try:
        preset = SCENARIOS[scenario]
    except KeyError:
        raise UnknownKind(f"Unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}.")
    frames = preset["frames"] if frames is None else int(frames)
    density = preset["density"] if density is None else float(density)

    mesh = canonical_sheet(image_size)
    extent = Extent.from_mesh(mesh)
    model = DeformationModel(preset["kind"], frames, extent, {**preset["params"], **params})
    texture = make_texture(image_size, extent, density, seed=np.random.default_rng([seed, 0]))

    seq = SyntheticSequence(scenario, mesh, model, density=density, seed=seed)
    logger.info(f"Rendering {scenario} scenario: {frames} frames, {mesh.n} vertices.")
    for t in tqdm(range(frames), desc=f"Rendering {scenario}", disable=None):
        truth = deform(model, mesh, t)
        clean = render(truth, mesh, texture, image_size)
        seq.truth.append(truth)
        seq.frames.append(add_depth_noise(clean, noise_sigma, dropout, seed=[seed, 2, t]))
        seq.correspondences.append(plant_correspondences(model, mesh, density, t, seed, clean, image_size))
    return seq


def write_sequence(seq, out_dir):
    """Write frames, manifest, truth meshes and planted correspondences."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width, height = seq.image_size
    write_manifest(
        out_dir,
        dict(
            scenario=seq.name,
            frames=len(seq.frames),
            width=width,
            height=height,
            z_near=seq.z_near,
            z_far=seq.z_far,
            spacing=seq.mesh.spacing,
            density=seq.density,
            seed=seq.seed,
        ),
    )
    for t, (frame, truth, corr) in enumerate(zip(seq.frames, seq.truth, seq.correspondences)):
        save_frame(out_dir, t, frame)
        write_obj(out_dir / ("truth_%05d.obj" % t), truth.vertices, seq.mesh.triangles)
        write_correspondence_csv(out_dir / ("corr_%05d.csv" % t), corr[CSV_COLUMNS])
    logger.info(f"Wrote {len(seq.frames)} frames to {out_dir}")
