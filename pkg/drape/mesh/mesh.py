#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Canonical hexagonal meshes, the smoothness matrix and barycentric attachment."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sps
from scipy import ndimage

from ..errors import DegenerateMesh, EmptyMask, OutsideMesh, SingularTriangle
from ..rgbd.frame import bilinear_sample

logger = logging.getLogger(__name__)

__all__ = [
    "MeshState",
    "CanonicalMesh",
    "BarycentricAttachment",
    "build_canonical_mesh",
    "smoothness_matrix",
    "triplet_matrix",
    "find_triplets",
    "vertex_adjacency",
    "barycentric_coords",
    "transform_point",
    "attachment_matrix",
]

ROW_FACTOR = np.sqrt(3.0) / 2.0
BETA_TOL = 1e-9
MIN_DEPTH_COVERAGE = 0.9


@dataclass
class MeshState:
    """Deformed vertex coordinates of a mesh, one vector per axis.

    Parameters
    ----------
    X, Y, Z : ndarray
        Image column, image row and depth of every vertex (length n).
    """

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        self.X = np.array(self.X, dtype=float).ravel()
        self.Y = np.array(self.Y, dtype=float).ravel()
        self.Z = np.array(self.Z, dtype=float).ravel()
        if not (self.X.size == self.Y.size == self.Z.size):
            raise ValueError(f"Coordinate vectors differ in length: {self.X.size}, {self.Y.size}, {self.Z.size}")

    @classmethod
    def from_vertices(cls, vertices):
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        return cls(vertices[:, 0], vertices[:, 1], vertices[:, 2])

    @property
    def n(self):
        return self.X.size

    @property
    def vertices(self):
        """The state as an (n, 3) array."""
        return np.column_stack((self.X, self.Y, self.Z))

    def copy(self):
        return MeshState(self.X.copy(), self.Y.copy(), self.Z.copy())

    def translated(self, offset):
        tx, ty, tz = offset
        return MeshState(self.X + tx, self.Y + ty, self.Z + tz)

    def max_displacement(self, other):
        """Largest Euclidean distance between corresponding vertices of two states."""
        if self.n == 0:
            return 0.0
        return float(np.sqrt(np.max((self.X - other.X) ** 2 + (self.Y - other.Y) ** 2 + (self.Z - other.Z) ** 2)))

    def is_finite(self):
        return bool(np.isfinite(self.X).all() and np.isfinite(self.Y).all() and np.isfinite(self.Z).all())


@dataclass(frozen=True)
class BarycentricAttachment:
    """A point expressed as convex weights over the vertices of one triangle.

    Attributes
    ----------
    triangle_index : int
        Index into the mesh triangles.
    vertex_indices : tuple of int
        The triangle's vertices (i, j, k), in the order matching `beta`.
    beta : tuple of float
        Barycentric weights (beta_i, beta_j, beta_k).
    """

    triangle_index: int
    vertex_indices: Tuple[int, int, int]
    beta: Tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class CanonicalMesh:
    """The undeformed reference mesh and everything derived from it.

    Attributes
    ----------
    vertices : ndarray
        (n, 3) canonical vertex coordinates (column, row, depth).
    triangles : ndarray
        (T, 3) vertex indices, counter-clockwise in the (x, y) plane.
    triplets : ndarray
        (m, 3) collinear triplets (i, j, k) with j the middle vertex.
    boundary : ndarray
        Sorted indices of vertices that do not have six neighbours.
    spacing : float
        Edge length in pixels.
    K : scipy.sparse.csr_matrix
        The n x n smoothness matrix.
    degree : ndarray
        Number of neighbours of each vertex.
    K_col : scipy.sparse.csr_matrix
        The m x n triplet matrix, K = K_col^T K_col.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    triplets: np.ndarray
    boundary: np.ndarray
    spacing: float
    K: sps.csr_matrix
    degree: np.ndarray
    K_col: sps.csr_matrix

    @classmethod
    def from_arrays(cls, vertices, triangles, spacing):
        """Derive triplets, boundary set and smoothness matrix for a planar mesh.

        Parameters
        ----------
        vertices : array_like
            (n, 3) vertex coordinates.
        triangles : array_like
            (T, 3) vertex indices. Winding is normalised to counter-clockwise.
        spacing : float
            Nominal edge length, used for tolerances.

        Returns
        -------
        CanonicalMesh
        """
        vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        triangles = np.array(triangles, dtype=np.intp).reshape(-1, 3)
        n = vertices.shape[0]
        if triangles.size and (triangles.min() < 0 or triangles.max() >= n):
            raise IndexError("Triangle index out of range.")

        # normalise winding
        p = vertices[triangles, :2]
        area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (
            p[:, 1, 1] - p[:, 0, 1]
        )
        flip = area2 < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]

        adjacency = vertex_adjacency(triangles, n)
        degree = np.diff(adjacency.indptr)
        triplets = find_triplets(vertices[:, :2], adjacency, tol=BETA_TOL * spacing)
        boundary = np.flatnonzero(degree != 6)
        K_col = triplet_matrix(triplets, n)
        K = smoothness_matrix(triplets, n)

        for arr in (vertices, triangles, triplets, boundary, degree):
            arr.setflags(write=False)

        return cls(vertices, triangles, triplets, boundary, float(spacing), K, degree, K_col)

    @property
    def n(self):
        return self.vertices.shape[0]

    def state(self):
        """The canonical mesh as a MeshState."""
        return MeshState.from_vertices(self.vertices)

    def extent(self):
        """(xmin, xmax, ymin, ymax) of the canonical vertices."""
        return (
            float(self.vertices[:, 0].min()),
            float(self.vertices[:, 0].max()),
            float(self.vertices[:, 1].min()),
            float(self.vertices[:, 1].max()),
        )


def vertex_adjacency(triangles, n):
    """Symmetric CSR adjacency of the mesh edges (sorted column indices)."""
    triangles = np.asarray(triangles, dtype=np.intp).reshape(-1, 3)
    a = triangles[:, [0, 1, 2, 1, 2, 0]].T.ravel()
    b = triangles[:, [1, 2, 0, 0, 1, 2]].T.ravel()
    adjacency = sps.csr_matrix((np.ones(a.size, dtype=np.int8), (a, b)), shape=(n, n))
    adjacency.sum_duplicates()
    adjacency.sort_indices()
    return adjacency


def find_triplets(xy, adjacency, tol=0.0):
    """Enumerate collinear, equidistant chains (i, j, k) of mesh edges.

    For each middle vertex j every pair of neighbours (i, k), i < k, is
    tested against v_i - v_j = v_j - v_k in the (x, y) plane.

    Parameters
    ----------
    xy : ndarray
        (n, 2) projected canonical positions.
    adjacency : scipy.sparse.csr_matrix
        Vertex adjacency with sorted indices.
    tol : float
        Absolute tolerance on each component of v_i - 2 v_j + v_k.

    Returns
    -------
    triplets : ndarray
        (m, 3) int array ordered by middle vertex, then i, then k.
    """
    xy = np.asarray(xy, dtype=float)
    found = []
    for j in range(xy.shape[0]):
        nbrs = adjacency.indices[adjacency.indptr[j] : adjacency.indptr[j + 1]]
        if nbrs.size < 2:
            continue
        p, q = np.triu_indices(nbrs.size, 1)
        resid = xy[nbrs[p]] + xy[nbrs[q]] - 2.0 * xy[j]
        hit = np.all(np.abs(resid) <= tol, axis=1)
        for i, k in zip(nbrs[p[hit]], nbrs[q[hit]]):
            found.append((i, j, k))
    return np.array(found, dtype=np.intp).reshape(-1, 3)


def triplet_matrix(triplets, n):
    """K_col: one row per triplet with +1, -2, +1 at columns i, j, k."""
    triplets = np.asarray(triplets, dtype=np.intp).reshape(-1, 3)
    if triplets.size and (triplets.min() < 0 or triplets.max() >= n):
        raise IndexError(f"Triplet index out of range for n={n}.")
    m = triplets.shape[0]
    rows = np.repeat(np.arange(m), 3)
    data = np.tile([1.0, -2.0, 1.0], m)
    return sps.csr_matrix((data, (rows, triplets.ravel())), shape=(m, n))


def smoothness_matrix(triplets, n):
    """Smoothness matrix K = K_col^T K_col.

    Parameters
    ----------
    triplets : array_like
        (m, 3) collinear triplets.
    n : int
        Number of vertices.

    Returns
    -------
    K : scipy.sparse.csr_matrix
        Symmetric positive semidefinite n x n matrix with zero row sums.
    """
    K_col = triplet_matrix(triplets, n)
    K = (K_col.T @ K_col).tocsr()
    K.sum_duplicates()
    K.sort_indices()
    return K


def _filled_depth(depth, mask, valid):
    good = valid & mask
    if good.all():
        return depth
    _, (rows, cols) = ndimage.distance_transform_edt(~good, return_indices=True)
    return depth[rows, cols]


def build_canonical_mesh(mask, depth, spacing, valid=None, min_triangles=3):
    """Build the canonical hexagonal mesh of equilateral triangles.

    The lattice is anchored to the image origin: vertex (a, b) sits at
    x = b * spacing + (a mod 2) * spacing / 2, y = a * spacing * sqrt(3) / 2.
    Rows and columns are chosen to cover the bounding box of the mask and
    triangles are kept when the pixel containing their centroid is
    foreground.

    Parameters
    ----------
    mask : ndarray
        Foreground bitmap (rows, cols).
    depth : ndarray
        Depth image registered with the mask; zero/non-finite is invalid.
    spacing : float
        Edge length in pixels (>= 2).
    valid : ndarray, optional
        Explicit depth validity; defaults to depth > 0.
    min_triangles : int
        Fewer surviving triangles raise DegenerateMesh. (default: 3)

    Returns
    -------
    CanonicalMesh
    """
    mask = np.asarray(mask, dtype=bool)
    depth = np.asarray(depth, dtype=float)
    if depth.shape != mask.shape:
        raise ValueError(f"Mask shape {mask.shape} does not match depth shape {depth.shape}.")
    if spacing < 2:
        raise ValueError(f"Mesh spacing must be at least 2 pixels (got {spacing}).")
    if not mask.any():
        raise EmptyMask("The foreground mask is empty.")

    if valid is None:
        valid = np.isfinite(depth) & (depth > 0)
    coverage = (valid & mask).sum() / mask.sum()
    if coverage < MIN_DEPTH_COVERAGE:
        raise ValueError(f"Depth is valid on only {coverage:.1%} of the mask.")
    if coverage < 1.0:
        logger.info(f"Filling {(mask & ~valid).sum()} invalid depth samples inside the mask.")

    rows, cols = np.nonzero(mask)
    height = spacing * ROW_FACTOR
    a_lo, a_hi = int(np.floor(rows.min() / height)), int(np.ceil(rows.max() / height))
    b_lo, b_hi = int(np.floor(cols.min() / spacing)) - 1, int(np.ceil(cols.max() / spacing))
    n_a, n_b = a_hi - a_lo + 1, b_hi - b_lo + 1

    aa, bb = np.meshgrid(np.arange(a_lo, a_hi + 1), np.arange(b_lo, b_hi + 1), indexing="ij")
    node_x = (bb * spacing + (aa % 2) * spacing / 2.0).ravel()
    node_y = (aa * height).ravel()

    def node(a, b):
        return (a - a_lo) * n_b + (b - b_lo)

    candidates = []
    for a in range(a_lo, a_hi):
        shift = a % 2
        for b in range(b_lo, b_hi + 1):
            dl, dr = (b - 1 + shift, b + shift)
            if b_lo <= dl and dr <= b_hi:
                candidates.append((node(a, b), node(a + 1, dl), node(a + 1, dr)))
            if b + 1 <= b_hi and dr <= b_hi:
                candidates.append((node(a, b), node(a, b + 1), node(a + 1, dr)))
    candidates = np.array(candidates, dtype=np.intp).reshape(-1, 3)

    cx = node_x[candidates].mean(axis=1)
    cy = node_y[candidates].mean(axis=1)
    ccol = np.floor(cx + 0.5).astype(np.intp)
    crow = np.floor(cy + 0.5).astype(np.intp)
    inside = (ccol >= 0) & (ccol < mask.shape[1]) & (crow >= 0) & (crow < mask.shape[0])
    keep = np.zeros(candidates.shape[0], dtype=bool)
    keep[inside] = mask[crow[inside], ccol[inside]]
    kept = candidates[keep]

    if kept.shape[0] < max(min_triangles, 1):
        raise DegenerateMesh(f"Only {kept.shape[0]} triangles survived clipping to the mask.")

    used, triangles = np.unique(kept, return_inverse=True)
    triangles = triangles.reshape(-1, 3)
    x, y = node_x[used], node_y[used]

    filled = _filled_depth(depth, mask, valid)
    xs = np.clip(x, 0, mask.shape[1] - 1)
    ys = np.clip(y, 0, mask.shape[0] - 1)
    z = bilinear_sample(filled, np.ones(mask.shape, dtype=bool), xs, ys)

    mesh = CanonicalMesh.from_arrays(np.column_stack((x, y, z)), triangles, spacing)
    logger.info(
        f"Built canonical mesh: {mesh.n} vertices, {mesh.triangles.shape[0]} triangles, "
        f"{mesh.triplets.shape[0]} triplets, {mesh.boundary.size} boundary vertices."
    )
    return mesh


def _solve_barycentric(tri_xy, p, spacing):
    (xi, yi), (xj, yj), (xk, yk) = tri_xy
    a, b = xi - xk, xj - xk
    c, d = yi - yk, yj - yk
    det = a * d - b * c
    if abs(det) < 1e-12 * spacing ** 2:
        raise SingularTriangle(f"Triangle determinant {det:g} is numerically zero.")
    rx, ry = p[0] - xk, p[1] - yk
    beta_i = (d * rx - b * ry) / det
    beta_j = (a * ry - c * rx) / det
    return np.array([beta_i, beta_j, 1.0 - beta_i - beta_j])


def barycentric_coords(p, mesh):
    """Attach a point to the canonical mesh by its barycentric coordinates.

    Solves the 2x2 system in x and y for each candidate triangle; points on
    shared edges go to the lowest triangle index.

    Parameters
    ----------
    p : array_like
        Point (x, y[, z]); only x and y are used.
    mesh : CanonicalMesh

    Returns
    -------
    BarycentricAttachment
    """
    p = np.asarray(p, dtype=float)
    tri_xy = mesh.vertices[mesh.triangles, :2]
    pad = BETA_TOL * mesh.spacing
    lo = tri_xy.min(axis=1) - pad
    hi = tri_xy.max(axis=1) + pad
    candidates = np.flatnonzero(np.all((p[:2] >= lo) & (p[:2] <= hi), axis=1))

    for t in candidates:
        beta = _solve_barycentric(tri_xy[t], p, mesh.spacing)
        if np.all(beta >= -BETA_TOL) and np.all(beta <= 1.0 + BETA_TOL):
            return BarycentricAttachment(
                int(t), tuple(int(i) for i in mesh.triangles[t]), tuple(float(b) for b in beta)
            )

    raise OutsideMesh(f"Point ({p[0]:.3f}, {p[1]:.3f}) lies outside the mesh.")


def transform_point(attachment, state):
    """Map an attached point through the deformed mesh (convex combination).

    Parameters
    ----------
    attachment : BarycentricAttachment
    state : MeshState

    Returns
    -------
    ndarray
        The deformed point (x, y, z).
    """
    idx = list(attachment.vertex_indices)
    beta = np.asarray(attachment.beta)
    return np.array([beta @ state.X[idx], beta @ state.Y[idx], beta @ state.Z[idx]])


def attachment_matrix(attachments: Sequence[BarycentricAttachment], n: int, dtype: Optional[type] = float):
    """Stack the sparse attachment vectors B_i into an m x n matrix."""
    m = len(attachments)
    if m == 0:
        return sps.csr_matrix((0, n), dtype=dtype)
    rows = np.repeat(np.arange(m), 3)
    cols = np.array([a.vertex_indices for a in attachments], dtype=np.intp).ravel()
    data = np.array([a.beta for a in attachments], dtype=dtype).ravel()
    B = sps.csr_matrix((data, (rows, cols)), shape=(m, n))
    B.sum_duplicates()
    return B
