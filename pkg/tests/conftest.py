#!/usr/bin/env python
# -*- coding: utf-8 -*-

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pytest

from drape.mesh import CanonicalMesh, build_canonical_mesh
from drape.rgbd import RgbdFrame, segmentation_from_mask


def rectangle_mask(shape, rows, cols):
    mask = np.zeros(shape, dtype=bool)
    mask[rows[0] : rows[1], cols[0] : cols[1]] = True
    return mask


def flat_frame(shape, depth=800.0, mask=None):
    """Constant-depth frame; pixels outside `mask` have no reading."""
    d = np.full(shape, float(depth))
    if mask is not None:
        d[~mask] = 0.0
    return RgbdFrame(np.zeros(shape + (3,), dtype=np.uint8), d)


@pytest.fixture
def rng():
    return np.random.default_rng(20201)


@pytest.fixture
def sheet_mask():
    return rectangle_mask((120, 140), (20, 90), (20, 110))


@pytest.fixture
def sheet_mesh(sheet_mask):
    return build_canonical_mesh(sheet_mask, np.full(sheet_mask.shape, 800.0), 10.0)


@pytest.fixture
def small_mesh():
    """A mesh with fewer than 50 vertices."""
    mask = rectangle_mask((60, 70), (8, 44), (8, 52))
    return build_canonical_mesh(mask, np.full(mask.shape, 800.0), 10.0)


@pytest.fixture
def sheet_frame(sheet_mask):
    return flat_frame(sheet_mask.shape, 800.0, sheet_mask)


@pytest.fixture
def sheet_seg(sheet_mask, sheet_frame):
    return segmentation_from_mask(sheet_mask, sheet_frame)


@pytest.fixture
def two_triangles():
    """Unit-ish square split along its diagonal."""
    vertices = np.array([[0.0, 0.0, 800.0], [10.0, 0.0, 800.0], [10.0, 10.0, 800.0], [0.0, 10.0, 800.0]])
    return CanonicalMesh.from_arrays(vertices, [[0, 1, 2], [0, 2, 3]], 10.0)


def random_attachment_points(mesh, count, rng):
    """Points inside random triangles with their barycentric weights."""
    tri = rng.integers(0, mesh.triangles.shape[0], count)
    beta = rng.dirichlet(np.ones(3), count)
    points = np.einsum("ki,kij->kj", beta, mesh.vertices[mesh.triangles[tri]])
    return tri, beta, points
