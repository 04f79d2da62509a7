#!/usr/bin/env python
# -*- coding: utf-8 -*-

import itertools

import numpy as np
import pytest
import trimesh
from conftest import random_attachment_points, rectangle_mask

from drape.errors import DegenerateMesh, EmptyMask, OutsideMesh, SingularTriangle
from drape.mesh import (
    CanonicalMesh,
    MeshState,
    attachment_matrix,
    barycentric_coords,
    build_canonical_mesh,
    read_obj,
    smoothness_matrix,
    transform_point,
    triplet_matrix,
    vertex_degrees,
    write_obj,
)
from drape.energy import psi_smoothness
from drape.mesh.io import unproject_pinhole, write_ply_points

ROW = np.sqrt(3.0) / 2.0


def hex_patch(n_rows, n_cols, spacing=10.0, z=800.0):
    """Vertices and triangles of an n_rows x n_cols patch of the hexagonal lattice."""
    vertices = [
        (b * spacing + (a % 2) * spacing / 2.0, a * spacing * ROW, z) for a in range(n_rows) for b in range(n_cols)
    ]
    triangles = []
    for a in range(n_rows - 1):
        shift = a % 2
        for b in range(n_cols):
            left, right = b - 1 + shift, b + shift
            if left >= 0 and right < n_cols:
                triangles.append((a * n_cols + b, (a + 1) * n_cols + left, (a + 1) * n_cols + right))
            if b + 1 < n_cols and right < n_cols:
                triangles.append((a * n_cols + b, a * n_cols + b + 1, (a + 1) * n_cols + right))
    return np.array(vertices), np.array(triangles)


def brute_force_triplets(mesh):
    """Every chain (i, j, k), i < k, of two mesh edges with v_i - v_j = v_j - v_k."""
    edges = set()
    for tri in mesh.triangles:
        for p, q in itertools.permutations(tri, 2):
            edges.add((int(p), int(q)))
    xy = mesh.vertices[:, :2]
    found = set()
    for i, j, k in itertools.permutations(range(mesh.n), 3):
        if i < k and (i, j) in edges and (j, k) in edges:
            if np.all(np.abs(xy[i] - 2 * xy[j] + xy[k]) <= 1e-9):
                found.add((i, j, k))
    return found


def dense_smoothness(triplets, n):
    K_col = np.zeros((len(triplets), n))
    for row, (i, j, k) in enumerate(triplets):
        K_col[row, i] += 1.0
        K_col[row, j] += -2.0
        K_col[row, k] += 1.0
    return K_col.T @ K_col


def test_rectangle_interior_vertices():
    spacing = 10.0
    mask = rectangle_mask((140, 140), (20, 120), (20, 120))
    mesh = build_canonical_mesh(mask, np.full(mask.shape, 800.0), spacing)

    interior = np.flatnonzero(mesh.degree == 6)
    assert interior.size > 0
    middles = np.bincount(mesh.triplets[:, 1], minlength=mesh.n)
    assert np.all(middles[interior] == 3)
    np.testing.assert_array_equal(mesh.boundary, np.flatnonzero(mesh.degree != 6))
    np.testing.assert_allclose(mesh.vertices[:, 2], 800.0)


def test_triplets_satisfy_collinearity(sheet_mesh):
    v = sheet_mesh.vertices
    i, j, k = sheet_mesh.triplets.T
    residual = v[i, :2] - 2 * v[j, :2] + v[k, :2]
    assert np.abs(residual).max() <= 1e-9


def test_hex_patch_matches_brute_force():
    vertices, triangles = hex_patch(5, 5)
    mesh = CanonicalMesh.from_arrays(vertices, triangles, 10.0)

    assert mesh.n == 25
    assert set(map(tuple, mesh.triplets.tolist())) == brute_force_triplets(mesh)
    degree = vertex_degrees(mesh.triangles, mesh.n)
    assert mesh.boundary.size == np.count_nonzero(degree != 6)
    # the 3x3 block of interior vertices
    assert np.count_nonzero(degree == 6) == 9


def test_built_mesh_matches_brute_force():
    mask = rectangle_mask((60, 60), (10, 40), (10, 45))
    mesh = build_canonical_mesh(mask, np.full(mask.shape, 800.0), 8.0)
    assert set(map(tuple, mesh.triplets.tolist())) == brute_force_triplets(mesh)


def test_single_triangle():
    mask = np.zeros((30, 30), dtype=bool)
    mask[6, 10] = True
    depth = np.full(mask.shape, 800.0)

    mesh = build_canonical_mesh(mask, depth, 10.0, min_triangles=1)
    assert mesh.triangles.shape == (1, 3)
    assert mesh.triplets.shape == (0, 3)
    np.testing.assert_array_equal(mesh.boundary, [0, 1, 2])
    assert mesh.K.nnz == 0

    with pytest.raises(DegenerateMesh):
        build_canonical_mesh(mask, depth, 10.0)


def test_build_errors():
    depth = np.full((40, 40), 800.0)
    with pytest.raises(EmptyMask):
        build_canonical_mesh(np.zeros((40, 40), dtype=bool), depth, 10.0)

    mask = rectangle_mask((40, 40), (5, 35), (5, 35))
    with pytest.raises(ValueError):
        build_canonical_mesh(mask, depth, 1.5)

    holes = depth.copy()
    holes[5:35, 5:10] = 0.0
    with pytest.raises(ValueError):
        build_canonical_mesh(mask, holes, 10.0)


def test_invalid_depth_is_filled(sheet_mask):
    depth = np.full(sheet_mask.shape, 800.0)
    depth[40:44, 50:54] = 0.0
    depth[0:5, :] = 0.0
    mesh = build_canonical_mesh(sheet_mask, depth, 10.0)
    np.testing.assert_allclose(mesh.vertices[:, 2], 800.0)


def test_lattice_is_anchored_to_image_origin(sheet_mesh):
    x, y = sheet_mesh.vertices[:, 0], sheet_mesh.vertices[:, 1]
    a = np.rint(y / (10.0 * ROW))
    np.testing.assert_allclose(y, a * 10.0 * ROW, atol=1e-9)
    b = (x - (a % 2) * 5.0) / 10.0
    np.testing.assert_allclose(b, np.rint(b), atol=1e-9)


def test_smoothness_matrix_single_triple():
    K = smoothness_matrix([(0, 1, 2)], 3).toarray()
    np.testing.assert_array_equal(K, [[1, -2, 1], [-2, 4, -2], [1, -2, 1]])


def test_smoothness_matrix_empty():
    K = smoothness_matrix(np.empty((0, 3), dtype=int), 4)
    assert K.shape == (4, 4)
    assert K.nnz == 0


def test_smoothness_matrix_index_bounds():
    with pytest.raises(IndexError):
        triplet_matrix([(0, 1, 3)], 3)


def test_smoothness_matrix_dense_oracle(rng):
    vertices, triangles = hex_patch(6, 6)
    keep = rng.random(triangles.shape[0]) < 0.8
    mesh = CanonicalMesh.from_arrays(vertices, triangles[keep], 10.0)

    dense = dense_smoothness(mesh.triplets, mesh.n)
    np.testing.assert_array_equal(mesh.K.toarray(), dense)
    np.testing.assert_array_equal(mesh.K.toarray().sum(axis=1), 0.0)


def test_smoothness_matrix_symmetric_psd(sheet_mesh, small_mesh):
    for mesh in (sheet_mesh, small_mesh):
        assert abs(mesh.K - mesh.K.T).max() == 0
    assert small_mesh.n <= 100
    assert np.linalg.eigvalsh(small_mesh.K.toarray()).min() >= -1e-10


def test_affine_states_in_nullspace(sheet_mesh, rng):
    xy = sheet_mesh.vertices[:, :2]
    for _ in range(20):
        coef = rng.normal(size=(3, 3))
        offset = rng.normal(scale=100.0, size=3)
        V = xy @ coef[:2] + offset
        state = MeshState.from_vertices(V)
        for axis in (state.X, state.Y, state.Z):
            assert np.abs(sheet_mesh.K @ axis).max() <= 1e-9
        assert psi_smoothness(state, sheet_mesh.K, sheet_mesh.K_col) <= 1e-9


def test_barycentric_at_vertex(two_triangles):
    a = barycentric_coords(two_triangles.vertices[1], two_triangles)
    assert a.triangle_index == 0
    assert a.beta[a.vertex_indices.index(1)] == pytest.approx(1.0)
    assert sum(a.beta) == pytest.approx(1.0, abs=1e-12)


def test_barycentric_at_centroid(sheet_mesh):
    t = sheet_mesh.triangles.shape[0] // 2
    centroid = sheet_mesh.vertices[sheet_mesh.triangles[t]].mean(axis=0)
    a = barycentric_coords(centroid, sheet_mesh)
    assert a.triangle_index == t
    np.testing.assert_allclose(a.beta, [1 / 3, 1 / 3, 1 / 3], atol=1e-12)


def test_barycentric_at_edge_midpoint(two_triangles):
    a = barycentric_coords((5.0, 0.0), two_triangles)
    assert a.vertex_indices == (0, 1, 2)
    np.testing.assert_allclose(a.beta, [0.5, 0.5, 0.0], atol=1e-12)


def test_barycentric_shared_edge_goes_to_lowest_triangle(two_triangles):
    a = barycentric_coords((4.0, 4.0), two_triangles)
    assert a.triangle_index == 0


def test_barycentric_outside(two_triangles):
    with pytest.raises(OutsideMesh):
        barycentric_coords((20.0, 5.0), two_triangles)


def test_barycentric_singular_triangle():
    mesh = CanonicalMesh.from_arrays([[0, 0, 1], [5, 0, 1], [10, 0, 1]], [[0, 1, 2]], 10.0)
    with pytest.raises(SingularTriangle):
        barycentric_coords((5.0, 0.0), mesh)


def test_barycentric_round_trip(sheet_mesh, rng):
    state = sheet_mesh.state()
    _, beta, points = random_attachment_points(sheet_mesh, 200, rng)
    for p in points:
        a = barycentric_coords(p, sheet_mesh)
        assert sum(a.beta) == pytest.approx(1.0, abs=1e-12)
        assert min(a.beta) >= -1e-9 and max(a.beta) <= 1 + 1e-9
        assert np.linalg.norm(transform_point(a, state) - p) <= 1e-9 * sheet_mesh.spacing


def test_transform_translated_state(sheet_mesh, rng):
    _, _, points = random_attachment_points(sheet_mesh, 20, rng)
    moved = sheet_mesh.state().translated((3.0, -2.0, 7.5))
    for p in points:
        np.testing.assert_allclose(transform_point(barycentric_coords(p, sheet_mesh), moved), p + [3.0, -2.0, 7.5])


def test_transform_random_deformation(two_triangles, rng):
    state = MeshState.from_vertices(two_triangles.vertices + rng.normal(scale=3.0, size=(4, 3)))
    p = 0.2 * two_triangles.vertices[0] + 0.5 * two_triangles.vertices[2] + 0.3 * two_triangles.vertices[3]
    a = barycentric_coords(p, two_triangles)
    assert a.triangle_index == 1

    V = state.vertices
    expected = 0.2 * V[0] + 0.5 * V[2] + 0.3 * V[3]
    np.testing.assert_allclose(transform_point(a, state), expected, atol=1e-9)


def plane(x, y):
    return 700.0 + 0.5 * x + 0.25 * y


def test_vertex_depth_samples_plane():
    shape = (100, 110)
    rows, cols = np.mgrid[0 : shape[0], 0 : shape[1]]
    mask = rectangle_mask(shape, (25, 75), (25, 85))
    mesh = build_canonical_mesh(mask, plane(cols, rows), 10.0)

    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    # vertices whose four neighbouring pixels are all foreground
    inner = (x >= 25) & (x <= 84) & (y >= 25) & (y <= 74)
    assert inner.sum() > 10
    np.testing.assert_allclose(mesh.vertices[inner, 2], plane(x[inner], y[inner]), atol=1e-9)


def test_attached_points_stay_on_plane():
    vertices, triangles = hex_patch(6, 7)
    vertices[:, 2] = plane(vertices[:, 0], vertices[:, 1])
    mesh = CanonicalMesh.from_arrays(vertices, triangles, 10.0)

    state = mesh.state()
    for p in mesh.vertices[mesh.triangles[::7]].mean(axis=1):
        q = transform_point(barycentric_coords(p, mesh), state)
        assert q[2] == pytest.approx(plane(p[0], p[1]), abs=1e-9)


def test_attachment_matrix(sheet_mesh, rng):
    _, _, points = random_attachment_points(sheet_mesh, 15, rng)
    attachments = [barycentric_coords(p, sheet_mesh) for p in points]
    B = attachment_matrix(attachments, sheet_mesh.n)
    assert B.shape == (15, sheet_mesh.n)
    np.testing.assert_allclose(B.sum(axis=1).A1, 1.0)

    state = MeshState.from_vertices(sheet_mesh.vertices + rng.normal(size=(sheet_mesh.n, 3)))
    predicted = np.column_stack((B @ state.X, B @ state.Y, B @ state.Z))
    expected = np.array([transform_point(a, state) for a in attachments])
    np.testing.assert_allclose(predicted, expected, atol=1e-9)

    assert attachment_matrix([], 5).shape == (0, 5)


def test_mesh_state():
    with pytest.raises(ValueError):
        MeshState([0, 1], [0, 1], [0])
    a = MeshState([0, 0], [0, 0], [0, 0])
    b = MeshState([3, 0], [4, 0], [0, 1])
    assert a.max_displacement(b) == pytest.approx(5.0)
    assert a.is_finite()
    assert not MeshState([np.nan], [0], [0]).is_finite()


def test_obj_round_trip(tmp_path, sheet_mesh):
    fname = tmp_path / "mesh.obj"
    write_obj(fname, sheet_mesh.vertices, sheet_mesh.triangles)
    vertices, triangles = read_obj(fname)
    np.testing.assert_allclose(vertices, sheet_mesh.vertices, atol=1e-7)
    np.testing.assert_array_equal(triangles, sheet_mesh.triangles)
    np.testing.assert_array_equal(vertex_degrees(triangles, len(vertices)), sheet_mesh.degree)
    with pytest.raises(FileNotFoundError):
        read_obj(tmp_path / "missing.obj")


def test_read_obj_polygons(tmp_path):
    fname = tmp_path / "quad.obj"
    fname.write_text("# quad\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\nf 1 2 3 4\n")
    vertices, triangles = read_obj(fname)
    assert vertices.shape == (4, 3)
    assert triangles.shape == (2, 3)
    assert set(triangles.ravel()) == {0, 1, 2, 3}
    p = vertices[triangles]
    area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    assert area.sum() == pytest.approx(1.0)


def test_pinhole_export(tmp_path):
    points = unproject_pinhole([[320.0, 240.0, 1000.0], [420.0, 240.0, 500.0]], 500.0, 500.0, 320.0, 240.0, 0.001)
    np.testing.assert_allclose(points, [[0.0, 0.0, 1.0], [0.1, 0.0, 0.5]])

    fname = tmp_path / "cloud.ply"
    write_ply_points(fname, points)
    assert fname.read_bytes().startswith(b"ply")
    assert b"format ascii" in fname.read_bytes()
    cloud = trimesh.load(str(fname), process=False)
    np.testing.assert_allclose(cloud.vertices, points, atol=1e-6)
