"""Input validation helpers shared by the estimator and functional APIs."""

from __future__ import annotations

import numpy as np

from .camera import CameraIntrinsics
from .errors import DimensionMismatch
from .geometry import Pose
from .mesh import TriangleMesh

# how far R^T R may deviate from the identity before a pose is rejected
_ORTHONORMAL_TOL = 1e-6


def check_silhouette(image, name="silhouette"):
    """Coerce to a float64 (H, W) array with values in [0, 1]."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return np.ascontiguousarray(arr)


def check_same_shape(a, b, name="images"):
    if np.shape(a) != np.shape(b):
        raise DimensionMismatch(f"{name} shapes differ: {np.shape(a)} vs {np.shape(b)}")


def check_pose(pose, name="pose"):
    """Require a Pose with an orthonormal, right-handed rotation."""
    if not isinstance(pose, Pose):
        raise TypeError(f"{name} must be a Pose, got {type(pose).__name__}")
    r = pose.rotation
    if not np.isfinite(r).all() or not np.isfinite(pose.translation).all():
        raise ValueError(f"{name} contains non-finite values")
    if np.abs(r.T @ r - np.eye(3)).max() > _ORTHONORMAL_TOL:
        raise ValueError(f"{name} rotation is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > _ORTHONORMAL_TOL:
        raise ValueError(f"{name} rotation is not right-handed")
    return pose


def check_camera(camera, name="camera"):
    if not isinstance(camera, CameraIntrinsics):
        raise TypeError(f"{name} must be CameraIntrinsics, got {type(camera).__name__}")
    return camera


def check_mesh(mesh, name="mesh"):
    if not isinstance(mesh, TriangleMesh):
        raise TypeError(f"{name} must be a TriangleMesh, got {type(mesh).__name__}")
    if len(mesh.triangles) == 0:
        raise ValueError(f"{name} has no triangles")
    return mesh
