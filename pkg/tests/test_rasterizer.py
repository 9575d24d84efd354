"""Hard and soft silhouette rasterization and the gradient tape."""

import math

import numpy as np
import pytest

from silfit import (
    DimensionMismatch,
    NothingVisible,
    Pose,
    SmoothLossEvaluator,
    SoftRasterConfig,
    StaleTape,
    TriangleMesh,
    backprop_to_pose,
    make_tetrahedron,
    project_vertices,
    random_pose_perturbations,
    rasterize_hard,
    rasterize_soft,
    soft_coverage,
    transform_vertices,
    triangle_coverage,
)


def _oracle_inside(tri, x, y):
    # independent top-left fill rule: orient, then edge tests with the
    # boundary credited to top and left edges only
    area2 = (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1]) - (tri[1, 1] - tri[0, 1]) * (
        tri[2, 0] - tri[0, 0]
    )
    if area2 < 0:
        tri = tri[[0, 2, 1]]
        area2 = -area2
    if area2 == 0:
        return False
    for i in range(3):
        ax, ay = tri[i]
        bx, by = tri[(i + 1) % 3]
        dx, dy = bx - ax, by - ay
        e = dx * (y - ay) - dy * (x - ax)
        if (dy == 0 and dx > 0) or dy < 0:
            if not e >= 0:
                return False
        elif not e > 0:
            return False
    return True


def _frame_triangle(camera, margin=2000.0):
    """One triangle whose projection covers the frame with a wide margin."""
    z = 1.0
    corners_uv = np.array(
        [[-margin, -margin], [camera.width + 3 * margin, -margin], [-margin, camera.height + 3 * margin]]
    )
    verts = np.column_stack(
        (
            (corners_uv[:, 0] - camera.cx) * z / camera.fx,
            (corners_uv[:, 1] - camera.cy) * z / camera.fy,
            np.full(3, z),
        )
    )
    return TriangleMesh(verts, np.array([[0, 1, 2]]))


def test_hard_raster_matches_brute_force(rig, camera, gt_pose, target):
    posed = transform_vertices(rig, gt_pose)
    uv = project_vertices(posed.vertices, camera)
    ys, xs = np.nonzero(target)
    r0, r1 = ys.min() - 2, ys.max() + 3
    c0, c1 = xs.min() - 2, xs.max() + 3
    for r in range(r0, r1):
        for c in range(c0, c1):
            ref = any(
                _oracle_inside(uv[tri], c + 0.5, r + 0.5) for tri in posed.triangles
            )
            assert ref == bool(target[r, c]), f"pixel ({r}, {c})"


def test_hard_raster_is_binary(target):
    assert set(np.unique(target)) <= {0.0, 1.0}
    assert target.sum() > 0


def test_full_frame_triangle_saturates(camera):
    mesh = _frame_triangle(camera)
    hard = rasterize_hard(mesh, camera)
    assert (hard == 1.0).all()
    soft, tape = rasterize_soft(mesh, camera)
    assert (soft == 1.0).all()
    assert len(tape.pixel_indices) == 0


def test_nothing_visible_raises(rig, camera, gt_pose):
    behind = Pose(gt_pose.rotation, np.array([0.0, 0.0, -5.0]))
    with pytest.raises(NothingVisible):
        rasterize_hard(transform_vertices(rig, behind), camera)
    with pytest.raises(NothingVisible):
        rasterize_soft(transform_vertices(rig, behind), camera)


def test_triangles_with_behind_vertices_drop_whole(camera):
    front = TriangleMesh(
        np.array([[-0.1, -0.1, 1.0], [0.1, -0.1, 1.0], [0.0, 0.1, 1.0]]),
        np.array([[0, 1, 2]]),
    )
    mixed = TriangleMesh(
        np.vstack((front.vertices, [[-0.3, 0.0, 1.0], [0.3, 0.0, 1.0], [0.0, 0.0, -0.5]])),
        np.array([[0, 1, 2], [3, 4, 5]]),
    )
    assert np.array_equal(rasterize_hard(front, camera), rasterize_hard(mixed, camera))


def test_soft_coverage_profile():
    """1 inside, exp(-d^2/sigma^2) in the band, 0 beyond truncation."""
    cfg = SoftRasterConfig()
    # long vertical edge at u = 100; interior lies at u > 100
    tri = np.array([[100.0, -100.0], [100.0, 340.0], [400.0, 120.0]])
    pts = np.array(
        [[101.5, 120.0], [98.5, 120.0], [100.0 - 12.5, 120.0], [100.0 - 11.5, 120.0]]
    )
    c = triangle_coverage(tri, pts, cfg)
    assert c[0] == 1.0
    assert c[1] == math.exp(-1.0)
    assert c[2] == 0.0
    assert 0.0 < c[3] < 1e-20


def test_soft_coverage_monotone_in_distance():
    cfg = SoftRasterConfig()
    tri = np.array([[100.0, -100.0], [100.0, 340.0], [400.0, 120.0]])
    dists = np.array([0.5, 1.5, 3.0, 6.0, 9.0, 11.9])
    pts = np.column_stack((100.0 - dists, np.full(len(dists), 120.0)))
    c = triangle_coverage(tri, pts, cfg)
    assert (np.diff(c) < 0).all()


def test_soft_coverage_tie_goes_to_lowest_index():
    cfg = SoftRasterConfig()
    tri = np.array([[10.0, 10.0], [30.0, 10.0], [20.0, 30.0]])
    pts = np.array([[20.0, 15.0], [20.0, 5.0], [200.0, 200.0]])
    alpha, owner = soft_coverage(np.stack((tri, tri)), pts, cfg)
    assert np.array_equal(owner, [0, 0, -1])
    assert alpha[2] == 0.0


def test_threshold_half_matches_hard_off_band(rig, camera, gt_pose, target):
    """Wherever the soft value saturates, thresholding recovers the hard mask."""
    soft, _ = rasterize_soft(transform_vertices(rig, gt_pose), camera)
    assert soft.min() >= 0.0 and soft.max() <= 1.0
    saturated = (soft == 0.0) | (soft == 1.0)
    assert saturated.sum() > 0.9 * soft.size
    assert ((soft > 0.5) == (target > 0.5))[saturated].all()


def test_tape_covers_exactly_the_band(rig, camera, gt_pose):
    soft, tape = rasterize_soft(transform_vertices(rig, gt_pose), camera)
    band = (soft > 0.0) & (soft < 1.0)
    ys, xs = np.nonzero(band)
    assert np.array_equal(np.sort(tape.pixel_indices), np.sort(ys * camera.width + xs))
    assert tape.duv.shape == (len(tape.pixel_indices), 3, 2)
    assert tape.n_vertices == len(rig.vertices)
    assert tape.n_triangles == len(rig.triangles)


def test_tape_gradients_match_finite_differences(rig, camera, gt_pose):
    """d(alpha)/d(vertex uv) of the winning triangle, against central differences."""
    cfg = SoftRasterConfig()
    posed = transform_vertices(rig, gt_pose)
    soft, tape = rasterize_soft(posed, camera, cfg)
    uv = project_vertices(posed.vertices, camera)
    rng = np.random.default_rng(27)
    picks = rng.choice(len(tape.pixel_indices), size=200, replace=False)
    h = 1e-3
    for k in picks:
        flat = tape.pixel_indices[k]
        point = np.array([[flat % camera.width + 0.5, flat // camera.width + 0.5]])
        tri_uv = uv[rig.triangles[tape.triangles[k]]]
        for vtx in range(3):
            for coord in range(2):
                up, dn = tri_uv.copy(), tri_uv.copy()
                up[vtx, coord] += h
                dn[vtx, coord] -= h
                fd = (
                    triangle_coverage(up, point, cfg)[0] - triangle_coverage(dn, point, cfg)[0]
                ) / (2 * h)
                an = tape.duv[k, vtx, coord]
                if max(abs(an), abs(fd)) <= 1e-6:
                    continue
                rel = abs(an - fd) / max(abs(an), abs(fd))
                assert rel <= 1e-3, f"pixel {flat} vertex {vtx} coord {coord}"


def test_translation_gradient_matches_finite_differences(rig, camera, gt_pose, target):
    # benign scenario: near the target, smooth loss upstream
    pose = random_pose_perturbations(gt_pose, 1, math.radians(8), 0.04, seed=5)[0]
    ev = SmoothLossEvaluator(target)

    def loss(t):
        p = Pose(pose.rotation, t)
        pred, tp = rasterize_soft(transform_vertices(rig, p), camera)
        return ev(pred)[0], pred, tp, p

    _, pred, tape, p0 = loss(pose.translation)
    _, upstream = ev(pred)
    _, grad_t = backprop_to_pose(tape, upstream, rig, p0, camera)
    h = 1e-4
    for i in range(3):
        tp_, tm_ = pose.translation.copy(), pose.translation.copy()
        tp_[i] += h
        tm_[i] -= h
        fd = (loss(tp_)[0] - loss(tm_)[0]) / (2 * h)
        rel = abs(grad_t[i] - fd) / max(abs(grad_t[i]), abs(fd), 1e-8)
        assert rel <= 1e-2


def test_render_and_tape_deterministic(rig, camera, gt_pose):
    posed = transform_vertices(rig, gt_pose)
    a1, t1 = rasterize_soft(posed, camera)
    a2, t2 = rasterize_soft(posed, camera)
    assert np.array_equal(a1, a2)
    assert np.array_equal(t1.pixel_indices, t2.pixel_indices)
    assert np.array_equal(t1.triangles, t2.triangles)
    assert np.array_equal(t1.duv, t2.duv)


def test_backprop_validates_inputs(rig, camera, gt_pose):
    posed = transform_vertices(rig, gt_pose)
    _, tape = rasterize_soft(posed, camera)
    with pytest.raises(DimensionMismatch):
        backprop_to_pose(tape, np.zeros((10, 10)), rig, gt_pose, camera)
    with pytest.raises(StaleTape):
        backprop_to_pose(tape, np.zeros((camera.height, camera.width)), make_tetrahedron(), gt_pose, camera)


def test_zero_upstream_gives_zero_gradients(rig, camera, gt_pose):
    _, tape = rasterize_soft(transform_vertices(rig, gt_pose), camera)
    grad_a, grad_t = backprop_to_pose(
        tape, np.zeros((camera.height, camera.width)), rig, gt_pose, camera
    )
    assert np.array_equal(grad_a, np.zeros(6))
    assert np.array_equal(grad_t, np.zeros(3))


def test_raster_config_validation():
    with pytest.raises(ValueError):
        SoftRasterConfig(sigma=0.0)
    with pytest.raises(ValueError):
        SoftRasterConfig(sigma=2.0, truncation_radius=3.0)
    cfg = SoftRasterConfig(sigma=2.0, truncation_radius=4.0)
    assert cfg.truncation_radius == 4.0
