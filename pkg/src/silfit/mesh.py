"""Triangle meshes: a Wavefront OBJ subset, transforms, and test shapes."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMesh, ParseError

logger = logging.getLogger(__name__)

# triangles with 3D area (m^2) at or below this are dropped as degenerate
DEGENERATE_AREA = 1e-12


@dataclass(frozen=True)
class TriangleMesh:
    """Vertices (n, 3) in meters and triangle vertex indices (m, 3)."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vertices = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        triangles = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError(f"triangles must be (m, 3), got {triangles.shape}")
        if len(triangles) and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError("triangle indices out of range")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    def __len__(self):
        return len(self.triangles)


def triangle_areas(mesh):
    """3D area of every triangle, shape (m,)."""
    a, b, c = (mesh.vertices[mesh.triangles[:, i]] for i in range(3))
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def transform_vertices(mesh, pose):
    """Apply a rigid pose to every vertex; triangle indices are shared."""
    vertices = mesh.vertices @ pose.rotation.T + pose.translation
    return TriangleMesh(vertices, mesh.triangles)


def diagonal(mesh):
    """Length of the axis-aligned bounding box diagonal."""
    if len(mesh.vertices) == 0:
        raise EmptyMesh("mesh has no vertices")
    extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    return float(np.linalg.norm(extent))


def _parse_face_index(token, n_vertices, line_no):
    """One face token: '7', '7/2', '7//3', or negative relative index."""
    head = token.split("/", 1)[0]
    try:
        idx = int(head)
    except ValueError:
        raise ParseError(f"bad face index {token!r}", line=line_no) from None
    if idx > 0:
        idx -= 1
    elif idx < 0:
        idx += n_vertices
    else:
        raise ParseError("face index 0 is not valid in OBJ", line=line_no)
    if not 0 <= idx < n_vertices:
        raise ParseError(f"face index {token!r} out of range", line=line_no)
    return idx


def load_obj(path):
    """Load the v/f subset of a Wavefront OBJ file.

    Polygon faces are fan-triangulated; texture/normal sub-indices are
    ignored; 1-based and negative indices are both honored.  Degenerate
    triangles (3D area <= 1e-12 m^2) are dropped and counted via a log
    message.  Raises ParseError with a line number on malformed input and
    EmptyMesh when no valid triangle survives.
    """
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            key = parts[0]
            if key == "v":
                if len(parts) < 4:
                    raise ParseError("vertex needs 3 coordinates", line=line_no)
                try:
                    vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError:
                    raise ParseError(f"bad vertex coordinate in {line!r}", line=line_no) from None
            elif key == "f":
                if len(parts) < 4:
                    raise ParseError("face needs at least 3 indices", line=line_no)
                idx = [_parse_face_index(tok, len(vertices), line_no) for tok in parts[1:]]
                for i in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[i], idx[i + 1]))
            # other directives (vn, vt, o, g, s, usemtl, mtllib, ...) are ignored
    if not faces:
        raise EmptyMesh(f"no faces in {path}")
    mesh = TriangleMesh(np.array(vertices, dtype=float), np.array(faces, dtype=np.int64))
    keep = triangle_areas(mesh) > DEGENERATE_AREA
    dropped = int((~keep).sum())
    if dropped:
        logger.info("dropped %d degenerate triangle(s) from %s", dropped, path)
    if not keep.any():
        raise EmptyMesh(f"no non-degenerate triangles in {path}")
    return TriangleMesh(mesh.vertices, mesh.triangles[keep])


def save_obj(mesh, path):
    """Write a mesh as a minimal v/f OBJ file (1-based indices)."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            fh.write(f"f {int(t[0]) + 1} {int(t[1]) + 1} {int(t[2]) + 1}\n")


def make_tetrahedron(scale=1.0):
    """Regular tetrahedron centered at the origin."""
    s = float(scale)
    vertices = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    ) * (s / np.sqrt(3.0))
    triangles = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh(vertices, triangles)


def make_box(lo, hi):
    """Axis-aligned box spanning lo..hi as 12 triangles."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    vertices = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
            [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
        ]
    )
    quads = [
        (0, 3, 2, 1), (4, 5, 6, 7),  # z faces
        (0, 1, 5, 4), (2, 3, 7, 6),  # y faces
        (0, 4, 7, 3), (1, 2, 6, 5),  # x faces
    ]
    triangles = []
    for a, b, c, d in quads:
        triangles.append((a, b, c))
        triangles.append((a, c, d))
    return TriangleMesh(vertices, np.array(triangles))


def make_icosphere(subdivisions=1, radius=1.0):
    """Icosahedron subdivided `subdivisions` times, projected to a sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    vertices /= np.linalg.norm(vertices[0])
    triangles = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    verts = [tuple(v) for v in vertices]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.array(verts[i]) + np.array(verts[j])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        new_tris = []
        for a, b, c in triangles:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_tris += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        triangles = np.array(new_tris)
    return TriangleMesh(np.array(verts) * radius, triangles)


def make_asymmetric_rig():
    """Elongated body with a fin and an arm; no silhouette symmetry.

    Useful for pose tests: every rotation changes the outline, which keeps
    orientation observable from a single silhouette.  About 0.3 m long.
    """
    body = make_box([-0.15, -0.05, -0.025], [0.15, 0.05, 0.025])
    fin = make_box([0.05, -0.01, 0.025], [0.15, 0.01, 0.10])
    arm = make_box([-0.15, 0.05, -0.01], [-0.05, 0.13, 0.01])
    parts = [body, fin, arm]
    vertices = np.vstack([p.vertices for p in parts])
    offset = 0
    triangles = []
    for p in parts:
        triangles.append(p.triangles + offset)
        offset += len(p.vertices)
    return TriangleMesh(vertices, np.vstack(triangles))
