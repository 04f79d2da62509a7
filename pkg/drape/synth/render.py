#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Software z-buffer rendering of a deformed mesh into an RGBD frame."""

import logging

import numpy as np

from ..rgbd.frame import RgbdFrame

logger = logging.getLogger(__name__)

__all__ = ["triangle_barycentrics", "render", "make_texture", "add_depth_noise"]

INSIDE_TOL = 1e-9
SHEET_GRAY = 128


def triangle_barycentrics(tri_xy, xs, ys):
    """Barycentric coordinates of pixel positions with respect to one triangle.

    Parameters
    ----------
    tri_xy : array_like
        (3, 2) triangle vertices.
    xs, ys : ndarray
        Query coordinates of any (matching) shape.

    Returns
    -------
    ndarray or None
        (3, ...) coordinates, or None for a degenerate triangle.
    """
    R = np.ones((3, 3))
    R[:2] = np.asarray(tri_xy, dtype=float).T
    if abs(np.linalg.det(R)) < 1e-9:
        return None
    Rinv = np.linalg.inv(R)
    return np.einsum("ij,j...->i...", Rinv[:, :2], np.stack((xs, ys))) + Rinv[:, 2].reshape((3,) + (1,) * xs.ndim)


def render(state, mesh, texture, image_size):
    """Rasterise the deformed mesh with a z-buffer.

    Every pixel centre covered by a triangle receives the interpolated depth
    of the nearest surface and the texture colour at the corresponding
    canonical position. Uncovered pixels get depth 0 (invalid) and black.

    Parameters
    ----------
    state : MeshState
        Deformed vertex positions.
    mesh : CanonicalMesh
        Supplies the triangles and the canonical texture coordinates.
    texture : ndarray or None
        (H, W, 3) uint8 image in canonical pixel coordinates; None renders a
        uniform grey sheet.
    image_size : tuple of int
        (width, height) of the output.

    Returns
    -------
    RgbdFrame
    """
    width, height = image_size
    zbuf = np.full((height, width), np.inf)
    color = np.zeros((height, width, 3), dtype=np.uint8)
    V = state.vertices
    if not np.isfinite(V).all():
        raise ValueError("Cannot render a state with non-finite vertices.")
    UV = mesh.vertices[:, :2]
    if texture is not None:
        texture = np.asarray(texture, dtype=np.uint8)

    for tri in mesh.triangles:
        xy = V[tri, :2]
        c0, c1 = max(int(np.ceil(xy[:, 0].min())), 0), min(int(np.floor(xy[:, 0].max())), width - 1)
        r0, r1 = max(int(np.ceil(xy[:, 1].min())), 0), min(int(np.floor(xy[:, 1].max())), height - 1)
        if c0 > c1 or r0 > r1:
            continue
        rr, cc = np.mgrid[r0 : r1 + 1, c0 : c1 + 1]
        beta = triangle_barycentrics(xy, cc.astype(float), rr.astype(float))
        if beta is None:
            continue
        inside = np.all(beta >= -INSIDE_TOL, axis=0)
        z = np.einsum("i,i...->...", V[tri, 2], beta)
        win = inside & (z < zbuf[rr, cc])
        if not win.any():
            continue
        rr, cc, z, beta = rr[win], cc[win], z[win], beta[:, win]
        zbuf[rr, cc] = z
        if texture is None:
            color[rr, cc] = SHEET_GRAY
        else:
            u = np.clip(np.floor(beta.T @ UV[tri, 0] + 0.5).astype(np.intp), 0, texture.shape[1] - 1)
            v = np.clip(np.floor(beta.T @ UV[tri, 1] + 0.5).astype(np.intp), 0, texture.shape[0] - 1)
            color[rr, cc] = texture[v, u]

    depth = np.where(np.isfinite(zbuf), zbuf, 0.0)
    return RgbdFrame(color, depth)


def make_texture(image_size, extent, density, seed=0):
    """A mid-grey sheet with seeded high-contrast blobs.

    Parameters
    ----------
    image_size : tuple of int
        (width, height).
    extent : Extent
        Region in which blobs are placed.
    density : float
        Blobs per 100x100 pixels; 0 gives a uniform sheet.
    seed : int or numpy.random.Generator

    Returns
    -------
    ndarray
        (height, width, 3) uint8 texture.
    """
    width, height = image_size
    rng = np.random.default_rng(seed)
    texture = np.full((height, width, 3), SHEET_GRAY, dtype=np.uint8)
    count = int(round(density * extent.area / 1e4))
    if count == 0:
        return texture
    cx = rng.uniform(extent.x0 + 3, extent.x1 - 3, count)
    cy = rng.uniform(extent.y0 + 3, extent.y1 - 3, count)
    radius = rng.uniform(2.5, 4.5, count)
    shade = np.where(rng.random(count) < 0.5, 30, 225).astype(np.uint8)
    rows, cols = np.mgrid[0:height, 0:width]
    for x, y, r, g in zip(cx, cy, radius, shade):
        texture[(cols - x) ** 2 + (rows - y) ** 2 <= r * r] = g
    return texture


def add_depth_noise(frame, sigma, dropout, seed=0):
    """Gaussian depth noise plus random dropout, quantised to 16-bit depth.

    Only pixels with valid depth are perturbed; noisy values are kept at
    least 1 so they stay valid.
    """
    rng = np.random.default_rng(seed)
    valid = frame.validity
    depth = frame.depth.copy()
    if sigma > 0:
        depth[valid] += rng.normal(0.0, sigma, valid.sum())
    depth[valid] = np.clip(np.rint(depth[valid]), 1, 65535)
    if dropout > 0:
        drop = valid & (rng.random(depth.shape) < dropout)
        depth[drop] = 0.0
    return RgbdFrame(frame.color, depth)
