#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Wavefront OBJ meshes and PLY point clouds."""

import logging
from pathlib import Path

import numpy as np
import trimesh

logger = logging.getLogger(__name__)

__all__ = ["write_obj", "read_obj", "write_ply_points", "unproject_pinhole", "vertex_degrees"]


def write_obj(fname, vertices, triangles):
    """Write a triangle mesh as OBJ, keeping vertex order and face winding.

    Parameters
    ----------
    fname : str or Path
        Output file.
    vertices : array_like
        (n, 3) vertex positions.
    triangles : array_like
        (T, 3) zero-based vertex indices.
    """
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=np.intp).reshape(-1, 3)
    mesh = trimesh.Trimesh(vertices=vertices, faces=triangles, process=False, validate=False)
    mesh.export(str(fname), file_type="obj", include_normals=False)


def read_obj(fname):
    """Read vertices and triangular faces from an OBJ file.

    The file is loaded without processing, so vertices keep their order and
    indices. Polygons are triangulated on load.

    Returns
    -------
    vertices : ndarray
        (n, 3) float array.
    triangles : ndarray
        (T, 3) zero-based int array.
    """
    fname = Path(fname)
    if not fname.exists():
        raise FileNotFoundError(f"No such mesh: {fname}")
    mesh = trimesh.load_mesh(str(fname), file_type="obj", process=False, maintain_order=True)
    if not isinstance(mesh, trimesh.Trimesh):
        raise ValueError(f"{fname}: expected a single triangle mesh.")
    return np.array(mesh.vertices, dtype=float), np.array(mesh.faces, dtype=np.intp)


def vertex_degrees(triangles, n):
    """Number of distinct edge neighbours of each vertex."""
    triangles = np.asarray(triangles, dtype=np.intp).reshape(-1, 3)
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    return np.bincount(edges.ravel(), minlength=n)


def unproject_pinhole(vertices, fx, fy, cx, cy, depth_scale=1.0):
    """Back-project (col, row, depth) points through a pinhole camera.

    Parameters
    ----------
    vertices : array_like
        (n, 3) image-plane positions with depth.
    fx, fy, cx, cy : float
        Camera intrinsics in pixels.
    depth_scale : float
        Metric units per depth unit.

    Returns
    -------
    ndarray
        (n, 3) camera-frame points.
    """
    v = np.asarray(vertices, dtype=float).reshape(-1, 3)
    z = v[:, 2] * depth_scale
    return np.column_stack(((v[:, 0] - cx) * z / fx, (v[:, 1] - cy) * z / fy, z))


def write_ply_points(fname, points):
    """Write an ASCII PLY point cloud."""
    cloud = trimesh.PointCloud(np.asarray(points, dtype=float).reshape(-1, 3))
    cloud.export(str(fname), file_type="ply", encoding="ascii")
    logger.info(f"Wrote {len(cloud.vertices)} points to {fname}")
