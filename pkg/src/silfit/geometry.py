"""Rotations, rigid poses, and geodesic pose interpolation.

Rotations live in SO(3) as 3x3 numpy arrays.  For optimization they are
parameterized by a continuous 6-vector: two stacked 3-vectors that
Gram-Schmidt orthonormalization turns into the first two columns of a
rotation matrix.  The map is smooth and surjective, which is what makes
gradient descent on poses behave; quaternions and Euler angles both have
discontinuous inverse charts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput

# sin(angle) threshold below which the two halves of a 6d vector count as parallel
_PARALLEL_TOL = 1e-8


def rot6d_to_matrix(a):
    """Map a 6d rotation vector to a rotation matrix by Gram-Schmidt.

    Parameters
    ----------
    a : array-like, shape (6,)
        First three components seed column 1, last three seed column 2.

    Returns
    -------
    R : ndarray, shape (3, 3)
        Orthonormal with det +1; columns (b1, b2, b1 x b2).

    Raises
    ------
    DegenerateInput
        If the first half is zero or the halves are parallel within 1e-8.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (6,):
        raise ValueError(f"expected shape (6,), got {a.shape}")
    a1, a2 = a[:3], a[3:]
    n1 = np.linalg.norm(a1)
    if n1 == 0.0:
        raise DegenerateInput("first half of the 6d vector is zero")
    b1 = a1 / n1
    u = a2 - (b1 @ a2) * b1
    nu = np.linalg.norm(u)
    n2 = np.linalg.norm(a2)
    if n2 == 0.0 or nu <= _PARALLEL_TOL * n2:
        raise DegenerateInput("second half of the 6d vector is parallel to the first")
    b2 = u / nu
    b3 = np.cross(b1, b2)
    return np.stack((b1, b2, b3), axis=1)


def matrix_to_rot6d(rotation):
    """Inverse chart: stack the first two columns of a rotation matrix."""
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (3, 3):
        raise ValueError(f"expected shape (3, 3), got {rotation.shape}")
    return np.concatenate((rotation[:, 0], rotation[:, 1]))


def rot6d_gradient(a, upstream):
    """Vector-Jacobian product of rot6d_to_matrix.

    Given dL/dR (same column convention as rot6d_to_matrix output),
    returns dL/da of shape (6,).  Matches central finite differences to
    high accuracy away from the degenerate set; see tests.
    """
    a = np.asarray(a, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    if a.shape != (6,):
        raise ValueError(f"expected shape (6,), got {a.shape}")
    if upstream.shape != (3, 3):
        raise ValueError(f"expected upstream shape (3, 3), got {upstream.shape}")
    a1, a2 = a[:3], a[3:]
    n1 = np.linalg.norm(a1)
    if n1 == 0.0:
        raise DegenerateInput("first half of the 6d vector is zero")
    b1 = a1 / n1
    u = a2 - (b1 @ a2) * b1
    nu = np.linalg.norm(u)
    n2 = np.linalg.norm(a2)
    if n2 == 0.0 or nu <= _PARALLEL_TOL * n2:
        raise DegenerateInput("second half of the 6d vector is parallel to the first")
    b2 = u / nu

    g1, g2, g3 = upstream[:, 0], upstream[:, 1], upstream[:, 2]
    # b3 = b1 x b2 feeds back into both preceding columns
    db2 = g2 + np.cross(g3, b1)
    db1 = g1 + np.cross(b2, g3)
    # through b2 = u / |u|
    du = (db2 - (b2 @ db2) * b2) / nu
    da2 = du - (b1 @ du) * b1
    # u also depends on b1: u = a2 - (b1 . a2) b1
    db1 = db1 - (b1 @ a2) * du - (b1 @ du) * a2
    da1 = (db1 - (b1 @ db1) * b1) / n1
    return np.concatenate((da1, da2))


def angular_distance(r1, r2):
    """Geodesic angle in radians between two rotation matrices.

    arccos((trace(r1 r2^T) - 1) / 2) with the argument clamped to [-1, 1]
    so round-off near the identity or a half turn cannot produce NaN.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    c = (np.trace(r1 @ r2.T) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def rotation_exp(axis_angle):
    """Rodrigues: axis-angle 3-vector to rotation matrix."""
    w = np.asarray(axis_angle, dtype=float)
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        return np.eye(3)
    k = w / theta
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)


def rotation_log(rotation):
    """Axis-angle 3-vector of a rotation matrix.

    The half-turn case (angle pi) has two antipodal axes; the one whose
    largest-magnitude component is positive is returned, which keeps
    interpolation deterministic.
    """
    rotation = np.asarray(rotation, dtype=float)
    c = np.clip((np.trace(rotation) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(c))
    if theta < 1e-12:
        return np.zeros(3)
    if np.pi - theta < 1e-6:
        # R ~ 2 a a^T - I; recover |a_i| from the diagonal, signs from off-diagonals
        m = (rotation + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(m), 0.0))
        k = int(np.argmax(axis))
        signs = np.sign(m[k])
        signs[signs == 0.0] = 1.0
        axis = axis * signs
        axis = axis / np.linalg.norm(axis)
        if axis[int(np.argmax(np.abs(axis)))] < 0.0:
            axis = -axis
        return axis * theta
    v = np.array(
        [
            rotation[2, 1] - rotation[1, 2],
            rotation[0, 2] - rotation[2, 0],
            rotation[1, 0] - rotation[0, 1],
        ]
    )
    return v * (theta / (2.0 * np.sin(theta)))


@dataclass(frozen=True)
class Pose:
    """Rigid transform: camera point = rotation @ model point + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=float)
        translation = np.asarray(self.translation, dtype=float)
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be (3, 3), got {rotation.shape}")
        if translation.shape != (3,):
            raise ValueError(f"translation must be (3,), got {translation.shape}")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def to_dict(self):
        """JSON-ready dict: row-major rotation, translation in meters."""
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.array(data["rotation"], dtype=float), np.array(data["translation"], dtype=float))


def compose(p1, p2):
    """Pose that applies p2 first, then p1 (matrix convention T1 @ T2)."""
    return Pose(p1.rotation @ p2.rotation, p1.rotation @ p2.translation + p1.translation)


def invert(pose):
    """Inverse rigid transform."""
    rt = pose.rotation.T
    return Pose(rt, -(rt @ pose.translation))


def geodesic_interpolate(p0, p1, lam):
    """Interpolate poses: linear in translation, geodesic in rotation.

    lam = 0 gives p0, lam = 1 gives p1, and the rotation angle from p0
    grows linearly in lam along the connecting geodesic.
    """
    lam = float(lam)
    t = (1.0 - lam) * p0.translation + lam * p1.translation
    rel = rotation_log(p0.rotation.T @ p1.rotation)
    r = p0.rotation @ rotation_exp(lam * rel)
    return Pose(r, t)
