#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from drape.errors import UnknownKind
from drape.mesh import MeshState, read_obj
from drape.rgbd import load_frame, read_manifest, sample_depth_many
from drape.synth import (
    IMAGE_SIZE,
    KINDS,
    SCENARIOS,
    DeformationModel,
    Extent,
    canonical_sheet,
    deform,
    deform_points,
    generate_sequence,
    make_texture,
    plant_correspondences,
    progress,
    render,
    write_sequence,
)


@pytest.fixture(scope="module")
def sheet():
    return canonical_sheet()


@pytest.fixture(scope="module")
def extent(sheet):
    return Extent.from_mesh(sheet)


def brute_force_depth(state, mesh, rows, cols):
    """Nearest surface depth at every pixel centre of a crop, by testing all triangles."""
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    best = np.full(rr.shape, np.inf)
    V = state.vertices
    for tri in mesh.triangles:
        (x0, y0, z0), (x1, y1, z1), (x2, y2, z2) = V[tri]
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(det) < 1e-9:
            continue
        b1 = ((cc - x0) * (y2 - y0) - (x2 - x0) * (rr - y0)) / det
        b2 = ((x1 - x0) * (rr - y0) - (cc - x0) * (y1 - y0)) / det
        b0 = 1.0 - b1 - b2
        inside = (b0 >= -1e-9) & (b1 >= -1e-9) & (b2 >= -1e-9)
        z = b0 * z0 + b1 * z1 + b2 * z2
        best = np.where(inside & (z < best), z, best)
    return np.where(np.isfinite(best), best, 0.0)


# ------------------------------------------------------------------ deform


@pytest.mark.parametrize("kind", KINDS)
def test_first_frame_is_identity(sheet, extent, kind):
    model = DeformationModel(kind, 10, extent)
    np.testing.assert_array_equal(deform(model, sheet, 0).vertices, sheet.vertices)


def test_progress():
    assert progress(0, 1) == 0.0
    assert progress(5, 11) == 0.5
    assert progress(10, 11) == 1.0


def test_translate(sheet, extent):
    model = DeformationModel("translate", 10, extent, dict(step=(5.0, 0.0, 0.0)))
    moved = deform(model, sheet, 3)
    np.testing.assert_allclose(moved.vertices - sheet.vertices, np.tile([15.0, 0.0, 0.0], (sheet.n, 1)))


def test_slant_is_a_rotation_about_the_bottom_edge(sheet, extent):
    theta = np.radians(60.0)
    model = DeformationModel("slant", 2, extent, dict(theta_max=60.0))
    pivot = np.array([0.0, extent.y1, extent.z0])
    expected = Rotation.from_rotvec([-theta, 0.0, 0.0]).apply(sheet.vertices - pivot) + pivot
    moved = deform(model, sheet, 1).vertices
    np.testing.assert_allclose(moved, expected, atol=1e-9)
    # the top edge tilts away from the camera
    top = sheet.vertices[:, 1] == sheet.vertices[:, 1].min()
    assert np.all(moved[top, 2] > extent.z0)


def test_bend_wraps_the_sheet_on_a_cylinder(sheet, extent):
    phi = np.radians(60.0)
    model = DeformationModel("cylinderBend", 5, extent, dict(phi_max=60.0))
    moved = deform(model, sheet, 4).vertices
    radius = 0.5 * (extent.x1 - extent.x0) / np.sin(phi)
    axis_z = sheet.vertices[:, 2] + radius * np.cos(phi)
    np.testing.assert_allclose(np.hypot(moved[:, 0] - extent.xc, moved[:, 2] - axis_z), radius)
    np.testing.assert_array_equal(moved[:, :2], sheet.vertices[:, :2])

    sides = np.isclose(np.abs(sheet.vertices[:, 0] - extent.xc), 0.5 * (extent.x1 - extent.x0))
    assert sides.any()
    np.testing.assert_allclose(moved[sides, 2], sheet.vertices[sides, 2], atol=1e-9)
    assert np.all(moved[~sides, 2] < sheet.vertices[~sides, 2])


def test_bend_angle_is_checked(sheet, extent):
    model = DeformationModel("cylinderBend", 3, extent, dict(phi_max=120.0))
    with pytest.raises(ValueError):
        deform(model, sheet, 2)


def test_fold_keeps_the_upper_part(sheet, extent):
    model = DeformationModel("foldOcclude", 3, extent)
    crease = extent.y0 + 2.0 / 3.0 * (extent.y1 - extent.y0)
    moved = deform(model, sheet, 2).vertices
    above = sheet.vertices[:, 1] <= crease
    np.testing.assert_array_equal(moved[above], sheet.vertices[above])
    # distances to the crease line are preserved
    before = np.hypot(sheet.vertices[~above, 1] - crease, sheet.vertices[~above, 2] - extent.z0)
    after = np.hypot(moved[~above, 1] - crease, moved[~above, 2] - extent.z0)
    np.testing.assert_allclose(after, before)
    assert np.all(moved[~above, 2] < extent.z0)


def test_unknown_kind(extent):
    with pytest.raises(UnknownKind):
        DeformationModel("twist", 10, extent)
    with pytest.raises(UnknownKind):
        generate_sequence("twist")
    model = DeformationModel("translate", 4, extent)
    with pytest.raises(ValueError):
        deform_points(model, np.zeros((1, 3)), 4)


# ------------------------------------------------------------------ render


def test_render_flat_sheet(sheet):
    frame = render(sheet.state(), sheet, None, IMAGE_SIZE)
    assert frame.shape == (IMAGE_SIZE[1], IMAGE_SIZE[0])
    assert frame.validity.any()
    np.testing.assert_allclose(frame.depth[frame.validity], 800.0)
    rows, cols = np.nonzero(frame.validity)
    x0, x1, y0, y1 = sheet.extent()
    assert cols.min() >= x0 and cols.max() <= x1
    assert rows.min() >= y0 and rows.max() <= y1


def test_render_fold_matches_brute_force(sheet, extent):
    model = DeformationModel("foldOcclude", 5, extent)
    state = deform(model, sheet, 4)
    frame = render(state, sheet, None, IMAGE_SIZE)
    for rows, cols in ((np.arange(60, 90), np.arange(60, 90)), (np.arange(90, 120), np.arange(100, 140))):
        expected = brute_force_depth(state, sheet, rows, cols)
        got = frame.depth[np.ix_(rows, cols)]
        both = (expected > 0) & (got > 0)
        assert np.count_nonzero((expected > 0) != (got > 0)) <= 0.01 * expected.size
        np.testing.assert_allclose(got[both], expected[both], atol=1e-6)


def test_render_slant_shrinks_width(sheet, extent):
    model = DeformationModel("slant", 2, extent, dict(theta_max=60.0, axis="left"))
    before = render(sheet.state(), sheet, None, IMAGE_SIZE)
    after = render(deform(model, sheet, 1), sheet, None, IMAGE_SIZE)
    row = int(round(0.5 * (extent.y0 + extent.y1)))
    w0 = np.count_nonzero(before.validity[row])
    w1 = np.count_nonzero(after.validity[row])
    assert abs(w1 - w0 * np.cos(np.radians(60.0))) <= 2


def test_texture(extent):
    plain = make_texture(IMAGE_SIZE, extent, 0.0)
    assert np.all(plain == plain[0, 0])
    spotted = make_texture(IMAGE_SIZE, extent, 10.0, seed=3)
    np.testing.assert_array_equal(spotted, make_texture(IMAGE_SIZE, extent, 10.0, seed=3))
    assert len(np.unique(spotted)) > 1


# -------------------------------------------------------- planted matches


def test_no_planted_correspondences_without_texture(sheet, extent):
    model = DeformationModel("translate", 3, extent)
    assert len(plant_correspondences(model, sheet, 0.0, 1)) == 0
    with pytest.raises(ValueError):
        plant_correspondences(model, sheet, -1.0, 1)


def test_planted_correspondences_at_rest(sheet, extent):
    model = DeformationModel("outOfPlaneRotate", 10, extent)
    table = plant_correspondences(model, sheet, 50.0, 0, seed=4)
    expected = round(50.0 * extent.area / 1e4)
    assert 0.9 * expected <= len(table) <= expected
    np.testing.assert_allclose(table[["ox", "oy", "oz"]].values, table[["cx", "cy", "cz"]].values, atol=1e-9)


def test_planted_correspondences_hidden_by_fold(sheet, extent):
    model = DeformationModel("foldOcclude", 5, extent)
    rest = plant_correspondences(model, sheet, 100.0, 0, seed=2)
    folded = plant_correspondences(model, sheet, 100.0, 4, seed=2)
    assert len(folded) < len(rest)

    frame = render(deform(model, sheet, 4), sheet, None, IMAGE_SIZE)
    observed = folded[["ox", "oy", "oz"]].values
    d = sample_depth_many(frame, observed[:, 0], observed[:, 1])
    assert np.all(np.abs(d - observed[:, 2]) <= 1.0)


# --------------------------------------------------------------- sequences


def test_generate_is_deterministic():
    a = generate_sequence("rotate", seed=7, frames=3)
    b = generate_sequence("rotate", seed=7, frames=3)
    c = generate_sequence("rotate", seed=8, frames=3)
    for fa, fb in zip(a.frames, b.frames):
        np.testing.assert_array_equal(fa.depth, fb.depth)
        np.testing.assert_array_equal(fa.color, fb.color)
    for ca, cb in zip(a.correspondences, b.correspondences):
        assert ca.equals(cb)
    assert not np.array_equal(a.frames[0].color, c.frames[0].color)


def test_scenario_defaults():
    assert set(SCENARIOS) >= {"static", "translate", "slant", "bend", "rotate", "fold", "textureless-rotate"}
    seq = generate_sequence("textureless-rotate", frames=2)
    assert seq.density == 0.0
    assert all(len(c) == 0 for c in seq.correspondences)


def test_rendered_depth_matches_truth():
    seq = generate_sequence("slant", frames=4, noise_sigma=0.0, dropout=0.0)
    interior = seq.mesh.degree == 6
    for frame, truth in zip(seq.frames, seq.truth):
        d = sample_depth_many(frame, truth.X[interior], truth.Y[interior])
        assert np.all(np.abs(d - truth.Z[interior]) <= 1.0)


def test_write_sequence(tmp_path):
    seq = generate_sequence("translate", frames=2, seed=1)
    write_sequence(seq, tmp_path)

    manifest = read_manifest(tmp_path)
    assert manifest["frames"] == 2 and manifest["scenario"] == "translate"
    assert (manifest["width"], manifest["height"]) == IMAGE_SIZE

    vertices, triangles = read_obj(tmp_path / "truth_00000.obj")
    np.testing.assert_allclose(vertices, seq.mesh.vertices, atol=1e-6)
    np.testing.assert_array_equal(triangles, seq.mesh.triangles)
    moved, _ = read_obj(tmp_path / "truth_00001.obj")
    np.testing.assert_allclose(MeshState.from_vertices(moved).X, seq.truth[1].X, atol=1e-6)

    frame = load_frame(tmp_path, 1)
    np.testing.assert_array_equal(frame.depth, seq.frames[1].depth)
    np.testing.assert_array_equal(frame.color, seq.frames[1].color)
    assert (tmp_path / "corr_00001.csv").exists()
