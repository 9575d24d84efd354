"""Pinhole camera model and point projection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera

# points closer than this to the camera plane (meters) do not project
DEFAULT_Z_NEAR = 1e-4


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels; (cx, cy) is the principal point.

    Image coordinates follow the pixel-area convention: u spans [0, width]
    with the center of column j at u = j + 0.5, and likewise for v/rows.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")


def intrinsics_from_fov(fov_x_degrees, width, height):
    """Build intrinsics from a horizontal field of view and image size.

    Square pixels (fy = fx) and a centered principal point.
    """
    if not 0.0 < fov_x_degrees < 180.0:
        raise ValueError("horizontal field of view must be in (0, 180) degrees")
    fx = (width / 2.0) / math.tan(math.radians(fov_x_degrees) / 2.0)
    return CameraIntrinsics(fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0, width=int(width), height=int(height))


def project_point(point, camera, z_near=DEFAULT_Z_NEAR):
    """Project one camera-frame point; also return the 2x3 Jacobian d(u,v)/d(x,y,z).

    Raises BehindCamera when z <= z_near.
    """
    x, y, z = np.asarray(point, dtype=float)
    if z <= z_near:
        raise BehindCamera(f"point at z={z:.6g} is behind the near plane {z_near:.6g}")
    u = camera.fx * x / z + camera.cx
    v = camera.fy * y / z + camera.cy
    jac = np.array(
        [
            [camera.fx / z, 0.0, -camera.fx * x / z**2],
            [0.0, camera.fy / z, -camera.fy * y / z**2],
        ]
    )
    return np.array([u, v]), jac


def project_vertices(vertices, camera):
    """Vectorized projection of (n, 3) camera-frame vertices to (n, 2) pixels.

    No near-plane check: callers must filter first.  Used by the rasterizer
    after its own visibility test.
    """
    vertices = np.asarray(vertices, dtype=float)
    z = vertices[:, 2]
    uv = np.empty((len(vertices), 2))
    uv[:, 0] = camera.fx * vertices[:, 0] / z + camera.cx
    uv[:, 1] = camera.fy * vertices[:, 1] / z + camera.cy
    return uv
