"""OBJ parsing, procedural meshes, and rigid transforms."""

import math

import numpy as np
import pytest

from silfit import (
    EmptyMesh,
    ParseError,
    Pose,
    compose,
    load_obj,
    make_asymmetric_rig,
    make_box,
    make_icosphere,
    make_tetrahedron,
    rotation_exp,
    save_obj,
    transform_vertices,
)
from silfit.mesh import diagonal, triangle_areas


def _write(tmp_path, text, name="m.obj"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_minimal_tetrahedron(tmp_path):
    path = _write(
        tmp_path,
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
        "f 1 2 3\nf 1 2 4\nf 1 3 4\nf 2 3 4\n",
    )
    mesh = load_obj(path)
    assert mesh.vertices.shape == (4, 3)
    assert mesh.triangles.shape == (4, 3)
    assert np.array_equal(mesh.vertices[1], [1.0, 0.0, 0.0])
    assert np.array_equal(mesh.triangles[0], [0, 1, 2])


def test_quad_faces_fan_triangulate(tmp_path):
    path = _write(tmp_path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    mesh = load_obj(path)
    assert np.array_equal(mesh.triangles, [[0, 1, 2], [0, 2, 3]])


def test_subindices_and_negative_indices(tmp_path):
    path = _write(tmp_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/5/2 2/7 3//9\n")
    mesh = load_obj(path)
    assert np.array_equal(mesh.triangles, [[0, 1, 2]])
    path = _write(tmp_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n", name="neg.obj")
    mesh = load_obj(path)
    assert np.array_equal(mesh.triangles, [[0, 1, 2]])


def test_comments_and_unknown_directives_ignored(tmp_path):
    path = _write(
        tmp_path,
        "# header\no thing\ns off\nvt 0 0\nvn 0 0 1\n"
        "v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 3\n",
    )
    assert len(load_obj(path).triangles) == 1


def test_degenerate_triangles_dropped(tmp_path):
    # the second face has two identical corners and zero area
    path = _write(
        tmp_path,
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 1 2\n",
    )
    mesh = load_obj(path)
    assert len(mesh.triangles) == 1
    path = _write(tmp_path, "v 0 0 0\nv 1 0 0\nf 1 1 2\n", name="allbad.obj")
    with pytest.raises(EmptyMesh):
        load_obj(path)


def test_parse_errors_carry_line_numbers(tmp_path):
    cases = [
        ("v 0 0 0\nv 1 zero 0\n", 2),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n", 4),
        ("v 0 0 0\nf 1 2 9\n", 2),
        ("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", 4),
        ("v 0 0\n", 1),
    ]
    for text, line in cases:
        with pytest.raises(ParseError) as err:
            load_obj(_write(tmp_path, text))
        assert err.value.line == line
        assert f"line {line}" in str(err.value)


def test_empty_inputs_raise(tmp_path):
    with pytest.raises(EmptyMesh):
        load_obj(_write(tmp_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\n"))
    with pytest.raises(EmptyMesh):
        load_obj(_write(tmp_path, "# nothing\n"))


def test_save_load_roundtrip(tmp_path):
    mesh = make_asymmetric_rig()
    path = tmp_path / "rig.obj"
    save_obj(mesh, path)
    again = load_obj(path)
    # repr-form floats round-trip exactly
    assert np.array_equal(mesh.vertices, again.vertices)
    assert np.array_equal(mesh.triangles, again.triangles)


def test_box_extents_and_diagonal():
    lo = np.array([-0.2, -0.1, 0.0])
    hi = np.array([0.4, 0.3, 0.5])
    box = make_box(lo, hi)
    assert np.array_equal(box.vertices.min(axis=0), lo)
    assert np.array_equal(box.vertices.max(axis=0), hi)
    assert len(box.triangles) == 12
    unit = make_box(np.zeros(3), np.ones(3))
    assert abs(diagonal(unit) - math.sqrt(3.0)) <= 1e-12


def test_tetrahedron_and_icosphere():
    tet = make_tetrahedron()
    assert tet.vertices.shape == (4, 3)
    assert len(tet.triangles) == 4
    for sub in (0, 1, 2):
        sphere = make_icosphere(subdivisions=sub, radius=0.5)
        assert len(sphere.triangles) == 20 * 4**sub
        norms = np.linalg.norm(sphere.vertices, axis=1)
        assert np.abs(norms - 0.5).max() <= 1e-9


def test_triangle_areas_brute_force():
    rng = np.random.default_rng(9)
    mesh = make_asymmetric_rig()
    areas = triangle_areas(mesh)
    for i, tri in enumerate(mesh.triangles):
        a, b, c = mesh.vertices[tri]
        ref = 0.5 * np.linalg.norm(np.cross(b - a, c - a))
        assert abs(areas[i] - ref) <= 1e-12
    assert (areas > 0).all()


def test_transform_preserves_distances(rig):
    rng = np.random.default_rng(15)
    pose = Pose(rotation_exp(rng.normal(size=3)), rng.normal(size=3))
    moved = transform_vertices(rig, pose)
    assert np.array_equal(moved.triangles, rig.triangles)
    idx = rng.integers(0, len(rig.vertices), size=(50, 2))
    for i, j in idx:
        before = np.linalg.norm(rig.vertices[i] - rig.vertices[j])
        after = np.linalg.norm(moved.vertices[i] - moved.vertices[j])
        assert abs(before - after) <= 1e-9


def test_transform_composes(rig):
    rng = np.random.default_rng(21)
    p1 = Pose(rotation_exp(rng.normal(size=3)), rng.normal(size=3))
    p2 = Pose(rotation_exp(rng.normal(size=3)), rng.normal(size=3))
    two_step = transform_vertices(transform_vertices(rig, p2), p1)
    one_step = transform_vertices(rig, compose(p1, p2))
    assert np.abs(two_step.vertices - one_step.vertices).max() <= 1e-9
