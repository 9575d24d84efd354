"""Hard and soft silhouette rasterization with a gradient tape.

The hard path is a conventional coverage rasterizer: a pixel is set when
its center falls inside some triangle's projection, boundary cases
resolved by a top-left fill rule so that triangles sharing an edge
partition pixels exactly.

The soft path makes the silhouette differentiable: per pixel, each
triangle contributes 1 inside its projection and exp(-d^2 / sigma^2)
outside, where d is the 2D distance from the pixel center to the
triangle's boundary, truncated to 0 beyond a fixed radius.  Per-pixel
contributions aggregate by max.  Alongside the image the rasterizer
records a tape holding, for every pixel strictly between 0 and 1, the
derivative of its value with respect to the winning triangle's three
projected vertex positions.  backprop_to_pose replays the tape through
the projection and rigid-transform Jacobians down to the pose parameters.

Interior pixels saturate at 1 and carry no gradient; only the exponential
band drives the pose.  That is the property the distance-aware losses
exploit: they keep the band populated with useful upstream signal even
when silhouettes do not overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import DEFAULT_Z_NEAR
from .errors import DimensionMismatch, NothingVisible, StaleTape
from .geometry import matrix_to_rot6d, rot6d_gradient


@dataclass(frozen=True)
class SoftRasterConfig:
    """Band shape: sigma in pixels, contributions zero beyond truncation_radius."""

    sigma: float = 1.5
    truncation_radius: float = 12.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.truncation_radius < 2.0 * self.sigma:
            raise ValueError("truncation_radius must be at least 2 * sigma")


@dataclass(frozen=True)
class GradientTape:
    """Sparse record of d(alpha)/d(projected vertex uv) for band pixels.

    pixel_indices are linear row-major indices in ascending order;
    triangles[i] is the winning triangle of pixel i; duv[i, j] is
    d(alpha_i)/d(uv of vertex j) of that triangle.  The vertex/triangle
    counts pin the mesh the tape was recorded for.
    """

    pixel_indices: np.ndarray
    triangles: np.ndarray
    duv: np.ndarray
    n_vertices: int
    n_triangles: int
    height: int
    width: int


def _orient(tri):
    """Return the triangle with non-negative doubled area (winding normalized)."""
    area2 = (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1]) - (tri[1, 1] - tri[0, 1]) * (
        tri[2, 0] - tri[0, 0]
    )
    if area2 < 0.0:
        return tri[[0, 2, 1]], -area2
    return tri, area2


def _inside(tri, px, py):
    """Point-in-triangle with the top-left fill rule; tri must be oriented.

    A point on an edge counts as inside only when the edge is a top edge
    (horizontal, running +x) or a left edge (running -y), in y-down pixel
    coordinates.  Two triangles sharing an edge then claim each boundary
    pixel exactly once.
    """
    ok = np.ones(np.broadcast_shapes(np.shape(px), np.shape(py)), dtype=bool)
    for i in range(3):
        ax, ay = tri[i]
        bx, by = tri[(i + 1) % 3]
        dx, dy = bx - ax, by - ay
        e = dx * (py - ay) - dy * (px - ax)
        if (dy == 0.0 and dx > 0.0) or dy < 0.0:
            ok &= e >= 0.0
        else:
            ok &= e > 0.0
    return ok


def _boundary_distance2(tri, px, py):
    """Squared distance from points to the nearest of the triangle's edges."""
    d2 = None
    for i in range(3):
        ax, ay = tri[i]
        bx, by = tri[(i + 1) % 3]
        ex, ey = bx - ax, by - ay
        ee = ex * ex + ey * ey
        pax = px - ax
        pay = py - ay
        t = np.clip((pax * ex + pay * ey) / (ee if ee > 0.0 else 1.0), 0.0, 1.0)
        vx = pax - t * ex
        vy = pay - t * ey
        d2i = vx * vx + vy * vy
        d2 = d2i if d2 is None else np.minimum(d2, d2i)
    return d2


def triangle_coverage(tri_uv, points, config):
    """Soft coverage of a single projected triangle at arbitrary 2D points.

    1 inside, exp(-d^2/sigma^2) within the truncation band, else 0.
    """
    tri, _ = _orient(np.asarray(tri_uv, dtype=float))
    points = np.asarray(points, dtype=float)
    px, py = points[..., 0], points[..., 1]
    inside = _inside(tri, px, py)
    d2 = _boundary_distance2(tri, px, py)
    c = np.exp(-d2 / config.sigma**2)
    c[d2 > config.truncation_radius**2] = 0.0
    c[inside] = 1.0
    return c


def soft_coverage(uv_triangles, points, config):
    """Max-aggregated coverage over triangles at arbitrary points.

    Returns (alpha, owner); owner[i] is the index of the triangle that
    attains the max at point i (lowest index on ties), -1 where alpha = 0.
    """
    points = np.asarray(points, dtype=float)
    alpha = np.zeros(points.shape[:-1])
    owner = np.full(points.shape[:-1], -1, dtype=np.int64)
    for idx, tri in enumerate(np.asarray(uv_triangles, dtype=float)):
        c = triangle_coverage(tri, points, config)
        better = c > alpha
        alpha[better] = c[better]
        owner[better] = idx
    return alpha, owner


def _visible_triangles(mesh, z_near):
    z_ok = mesh.vertices[:, 2] > z_near
    tri_ok = z_ok[mesh.triangles].all(axis=1)
    if not tri_ok.any():
        raise NothingVisible("all triangles are behind the near plane")
    return np.nonzero(tri_ok)[0], z_ok


def _project_visible(mesh, camera, z_ok):
    """uv for vertices in front of the near plane; others left at 0, never read."""
    uv = np.zeros((len(mesh.vertices), 2))
    v = mesh.vertices[z_ok]
    uv[z_ok, 0] = camera.fx * v[:, 0] / v[:, 2] + camera.cx
    uv[z_ok, 1] = camera.fy * v[:, 1] / v[:, 2] + camera.cy
    return uv


def _bbox(tri, margin, width, height):
    x0 = int(np.floor(tri[:, 0].min() - margin - 0.5))
    x1 = int(np.ceil(tri[:, 0].max() + margin - 0.5))
    y0 = int(np.floor(tri[:, 1].min() - margin - 0.5))
    y1 = int(np.ceil(tri[:, 1].max() + margin - 0.5))
    return max(x0, 0), min(x1, width - 1), max(y0, 0), min(y1, height - 1)


def rasterize_hard(mesh, camera, z_near=DEFAULT_Z_NEAR):
    """Binary silhouette of a camera-frame mesh; values are float 0.0/1.0.

    Triangles with any vertex at or behind the near plane are dropped
    whole (no clipping).  Raises NothingVisible when none survive.
    """
    tri_idx, z_ok = _visible_triangles(mesh, z_near)
    uv = _project_visible(mesh, camera, z_ok)
    out = np.zeros((camera.height, camera.width))
    for ti in tri_idx:
        tri, area2 = _orient(uv[mesh.triangles[ti]])
        if area2 == 0.0:
            continue
        x0, x1, y0, y1 = _bbox(tri, 0.0, camera.width, camera.height)
        if x0 > x1 or y0 > y1:
            continue
        px = np.arange(x0, x1 + 1) + 0.5
        py = (np.arange(y0, y1 + 1) + 0.5)[:, None]
        sub = out[y0 : y1 + 1, x0 : x1 + 1]
        sub[_inside(tri, px, py)] = 1.0
    return out


def rasterize_soft(mesh, camera, config=None, z_near=DEFAULT_Z_NEAR):
    """Soft silhouette in [0, 1] plus the gradient tape.

    Deterministic: triangles are visited in index order and ties in the
    max go to the lowest triangle index, so repeated runs are bit-identical.
    """
    if config is None:
        config = SoftRasterConfig()
    tri_idx, z_ok = _visible_triangles(mesh, z_near)
    uv = _project_visible(mesh, camera, z_ok)
    height, width = camera.height, camera.width
    alpha = np.zeros((height, width))
    owner = np.full((height, width), -1, dtype=np.int64)
    sig2 = config.sigma**2
    trunc2 = config.truncation_radius**2
    for ti in tri_idx:
        tri, _ = _orient(uv[mesh.triangles[ti]])
        x0, x1, y0, y1 = _bbox(tri, config.truncation_radius, width, height)
        if x0 > x1 or y0 > y1:
            continue
        px = np.arange(x0, x1 + 1) + 0.5
        py = (np.arange(y0, y1 + 1) + 0.5)[:, None]
        inside = _inside(tri, px, py)
        d2 = _boundary_distance2(tri, px, py)
        c = np.exp(-d2 / sig2)
        c[d2 > trunc2] = 0.0
        c[inside] = 1.0
        asub = alpha[y0 : y1 + 1, x0 : x1 + 1]
        osub = owner[y0 : y1 + 1, x0 : x1 + 1]
        better = c > asub
        asub[better] = c[better]
        osub[better] = ti
    tape = _record_tape(mesh, uv, alpha, owner, config)
    return alpha, tape


def _record_tape(mesh, uv, alpha, owner, config):
    height, width = alpha.shape
    band = (alpha > 0.0) & (alpha < 1.0)
    ys, xs = np.nonzero(band)
    k = len(ys)
    duv = np.zeros((k, 3, 2))
    tris = owner[band]
    if k:
        tri_uv = uv[mesh.triangles[tris]]  # (k, 3, 2), original winding
        px = xs + 0.5
        py = ys + 0.5
        d2s, ts, vxs, vys = [], [], [], []
        for i in range(3):
            a = tri_uv[:, i]
            b = tri_uv[:, (i + 1) % 3]
            e = b - a
            ee = e[:, 0] ** 2 + e[:, 1] ** 2
            pax = px - a[:, 0]
            pay = py - a[:, 1]
            t = (pax * e[:, 0] + pay * e[:, 1]) / np.where(ee > 0.0, ee, 1.0)
            t = np.clip(t, 0.0, 1.0)
            vx = pax - t * e[:, 0]
            vy = pay - t * e[:, 1]
            d2s.append(vx * vx + vy * vy)
            ts.append(t)
            vxs.append(vx)
            vys.append(vy)
        d2 = np.stack(d2s)
        seg = np.argmin(d2, axis=0)
        rows = np.arange(k)
        dmin2 = d2[seg, rows]
        t = np.stack(ts)[seg, rows]
        nx = np.stack(vxs)[seg, rows]
        ny = np.stack(vys)[seg, rows]
        d = np.sqrt(dmin2)
        nx = nx / d
        ny = ny / d
        # d(alpha)/dd on the band, then dd/d(endpoint) = -(1-t) n / -t n
        a_val = np.exp(-dmin2 / config.sigma**2)
        factor = a_val * (-2.0 * d / config.sigma**2)
        ga = factor * -(1.0 - t)
        gb = factor * -t
        i_idx = seg  # segment s runs vertex s -> vertex (s+1) % 3
        j_idx = (seg + 1) % 3
        duv[rows, i_idx, 0] = ga * nx
        duv[rows, i_idx, 1] = ga * ny
        duv[rows, j_idx, 0] += gb * nx
        duv[rows, j_idx, 1] += gb * ny
    return GradientTape(
        pixel_indices=ys * width + xs,
        triangles=tris,
        duv=duv,
        n_vertices=len(mesh.vertices),
        n_triangles=len(mesh.triangles),
        height=height,
        width=width,
    )


def backprop_to_pose(tape, upstream, mesh, pose, camera, rot6d=None):
    """Chain per-pixel dL/d(alpha) through the tape down to pose parameters.

    `mesh` is the model-frame mesh the tape's render posed with `pose`.
    Returns (dL/d(rot6d), dL/d(translation)); the 6d point of
    linearization defaults to the pose's own first two columns.
    """
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (tape.height, tape.width):
        raise DimensionMismatch(
            f"upstream shape {upstream.shape} does not match tape {(tape.height, tape.width)}"
        )
    if tape.n_vertices != len(mesh.vertices) or tape.n_triangles != len(mesh.triangles):
        raise StaleTape("tape was recorded for a different mesh")
    if rot6d is None:
        rot6d = matrix_to_rot6d(pose.rotation)
    dl_duv = np.zeros((len(mesh.vertices), 2))
    if len(tape.pixel_indices):
        w = upstream.ravel()[tape.pixel_indices]
        contrib = tape.duv * w[:, None, None]
        vert_idx = mesh.triangles[tape.triangles]
        np.add.at(dl_duv, vert_idx.reshape(-1), contrib.reshape(-1, 2))
    active = np.nonzero((dl_duv[:, 0] != 0.0) | (dl_duv[:, 1] != 0.0))[0]
    if len(active) == 0:
        return np.zeros(6), np.zeros(3)
    model = mesh.vertices[active]
    cam = model @ pose.rotation.T + pose.translation
    x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]
    gu, gv = dl_duv[active, 0], dl_duv[active, 1]
    gx = camera.fx / z * gu
    gy = camera.fy / z * gv
    gz = -(camera.fx * x / z**2) * gu - (camera.fy * y / z**2) * gv
    g_cam = np.stack((gx, gy, gz), axis=1)
    dl_dt = g_cam.sum(axis=0)
    dl_dr = g_cam.T @ model
    return rot6d_gradient(rot6d, dl_dr), dl_dt
