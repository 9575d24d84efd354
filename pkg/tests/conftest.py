"""Shared scene fixtures for the test suite.

One asymmetric rig viewed by a VGA-ish pinhole camera from about a
meter away.  The ground-truth silhouette covers roughly 70x42 pixels,
which keeps renders fast while leaving room for the displaced starts
some tests need.
"""

import math

import numpy as np
import pytest
from scipy.ndimage import distance_transform_edt

from silfit import (
    Pose,
    intrinsics_from_fov,
    make_asymmetric_rig,
    rasterize_hard,
    rotation_exp,
    transform_vertices,
)


@pytest.fixture(scope="session")
def camera():
    return intrinsics_from_fov(64.69, 320, 240)


@pytest.fixture(scope="session")
def rig():
    return make_asymmetric_rig()


@pytest.fixture(scope="session")
def gt_pose():
    return Pose(rotation_exp(np.array([0.3, -0.2, 0.1])), np.array([0.02, -0.01, 1.15]))


@pytest.fixture(scope="session")
def target(rig, camera, gt_pose):
    return rasterize_hard(transform_vertices(rig, gt_pose), camera)


def build_disjoint_starts(mesh, camera, gt_pose, target, n=6, gap_range=(14.0, 22.0)):
    """Poses whose silhouette is disjoint from the target by a controlled gap.

    Each start displaces the pose laterally along one of n image-plane
    directions; the offset is bisected until the minimum distance between
    the two hard supports lands in gap_range pixels.  The lower bound
    keeps the soft band (truncation 12 px) from touching the target, the
    upper bound keeps the target within reach of the default box-49
    proximity field.  Returns a list of (pose, gap) pairs.
    """
    tgt = target.astype(bool)
    dist_out = distance_transform_edt(~tgt)
    ys, xs = np.nonzero(tgt)
    u0, u1 = float(xs.min()), float(xs.max())
    v0, v1 = float(ys.min()), float(ys.max())
    z = float(gt_pose.translation[2])
    starts = []
    for k in range(n):
        ang = 2.0 * math.pi * k / n
        dx, dy = math.cos(ang), math.sin(ang)
        # how far the silhouette bbox can shift along (dx, dy) and stay in frame
        room = []
        if dx > 1e-9:
            room.append((camera.width - 1 - u1) / dx)
        if dx < -1e-9:
            room.append(u0 / -dx)
        if dy > 1e-9:
            room.append((camera.height - 1 - v1) / dy)
        if dy < -1e-9:
            room.append(v0 / -dy)
        lo, hi = 0.0, 0.95 * min(room)
        found = None
        for _ in range(12):
            mid = 0.5 * (lo + hi)
            t_off = np.array([dx * mid * z / camera.fx, dy * mid * z / camera.fy, 0.0])
            cand = Pose(gt_pose.rotation, gt_pose.translation + t_off)
            pred = rasterize_hard(transform_vertices(mesh, cand), camera) > 0.5
            gap = float(dist_out[pred].min()) if pred.any() else math.inf
            if gap < gap_range[0]:
                lo = mid
            elif gap > gap_range[1]:
                hi = mid
            else:
                found = (cand, gap)
                break
        assert found is not None, f"no disjoint start found along direction {k}"
        starts.append(found)
    return starts


@pytest.fixture(scope="session")
def disjoint_starts(rig, camera, gt_pose, target):
    return build_disjoint_starts(rig, camera, gt_pose, target)
