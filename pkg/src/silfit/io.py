"""File formats: binary PGM silhouettes, JSON poses/cameras, CSV, manifests.

All writers are byte-stable: the same data always serializes to the same
bytes, so identical runs can be diffed file-for-file.  Floats in CSV use
repr (shortest round-trip form).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .camera import CameraIntrinsics, intrinsics_from_fov
from .errors import ParseError
from .geometry import Pose
from .metrics import PosePair

# silhouette gray levels at or above this read back as foreground
MASK_THRESHOLD = 128


def write_pgm(path, image):
    """Write an image with values in [0, 1] as binary 8-bit PGM (P5)."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError(f"image must be 2D, got shape {image.shape}")
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def _read_pgm_tokens(blob, path):
    """First three whitespace-separated header tokens after the magic, skipping comments."""
    tokens = []
    i = 2  # past "P5"
    while len(tokens) < 3:
        while i < len(blob) and blob[i : i + 1].isspace():
            i += 1
        if i >= len(blob):
            raise ParseError(f"truncated PGM header in {path}")
        if blob[i : i + 1] == b"#":
            while i < len(blob) and blob[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(blob) and not blob[i : i + 1].isspace():
            i += 1
        tokens.append(blob[start:i])
    return tokens, i + 1  # single whitespace byte separates header from raster


def read_pgm(path):
    """Read a binary 8-bit PGM into a float array in [0, 1] (value / maxval)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] != b"P5":
        raise ParseError(f"{path} is not a binary PGM (missing P5 magic)")
    tokens, offset = _read_pgm_tokens(blob, path)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ParseError(f"bad PGM header in {path}") from None
    if maxval <= 0 or maxval > 255:
        raise ParseError(f"unsupported PGM maxval {maxval} in {path}")
    raster = blob[offset : offset + width * height]
    if len(raster) != width * height:
        raise ParseError(f"PGM raster truncated in {path}")
    data = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return data.astype(float) / maxval


def read_mask(path):
    """Read a PGM and binarize at the 128/255 threshold; returns {0.0, 1.0}."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] != b"P5":
        raise ParseError(f"{path} is not a binary PGM (missing P5 magic)")
    tokens, offset = _read_pgm_tokens(blob, path)
    width, height, maxval = (int(t) for t in tokens)
    raster = blob[offset : offset + width * height]
    if len(raster) != width * height:
        raise ParseError(f"PGM raster truncated in {path}")
    data = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return (data >= MASK_THRESHOLD * maxval / 255.0).astype(float)


def write_pose(path, pose):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pose.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_pose(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad pose JSON in {path}: {exc}", line=exc.lineno) from None
    try:
        return Pose.from_dict(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad pose JSON in {path}: {exc}") from None


def read_camera(path):
    """Camera JSON: either explicit intrinsics or {fov_degrees, width, height}."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad camera JSON in {path}: {exc}", line=exc.lineno) from None
    try:
        if "fov_degrees" in data:
            return intrinsics_from_fov(float(data["fov_degrees"]), int(data["width"]), int(data["height"]))
        return CameraIntrinsics(
            fx=float(data["fx"]),
            fy=float(data["fy"]),
            cx=float(data["cx"]),
            cy=float(data["cy"]),
            width=int(data["width"]),
            height=int(data["height"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad camera JSON in {path}: {exc}") from None


def write_camera(path, camera):
    data = {
        "fx": camera.fx,
        "fy": camera.fy,
        "cx": camera.cx,
        "cy": camera.cy,
        "width": camera.width,
        "height": camera.height,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_pairs(path):
    """Pose pairs as JSON lines: {"id": ..., "gt": pose, "pred": pose}."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                pairs.append(
                    PosePair(
                        id=str(data["id"]),
                        gt=Pose.from_dict(data["gt"]),
                        pred=Pose.from_dict(data["pred"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise ParseError(f"bad pair in {path}: {exc}", line=line_no) from None
    return pairs


def write_pairs(path, pairs):
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps(
                    {"id": pair.id, "gt": pair.gt.to_dict(), "pred": pair.pred.to_dict()},
                    sort_keys=True,
                )
                + "\n"
            )


def write_trace_csv(path, trace):
    """Refinement trace: step, loss, grad_norm, tx, ty, tz, r00..r22."""
    header = "step,loss,grad_norm,tx,ty,tz," + ",".join(
        f"r{i}{j}" for i in range(3) for j in range(3)
    )
    lines = [header]
    for k in range(len(trace)):
        pose = trace.poses[k]
        cells = [str(k), repr(float(trace.losses[k])), repr(float(trace.grad_norms[k]))]
        cells += [repr(float(v)) for v in pose.translation]
        cells += [repr(float(v)) for v in pose.rotation.ravel()]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_matrix_csv(path, matrix):
    """Plain numeric matrix, one CSV row per array row."""
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in np.atleast_1d(row)) + "\n")


def write_rows_csv(path, columns, rows):
    """Dict rows under an explicit column order."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row[c]) for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _cell(value):
    if isinstance(value, float):
        # plain-float repr even for numpy scalars, which subclass float
        return repr(float(value))
    return str(value)


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Reproducibility record written alongside every CLI output."""

    command: str
    arguments: dict
    seed: int
    configs: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    timestamp: str = ""

    def add_artifact(self, path):
        self.artifacts[str(path)] = sha256_file(path)

    def write(self, path):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()
        data = {
            "command": self.command,
            "arguments": self.arguments,
            "seed": self.seed,
            "configs": self.configs,
            "artifacts": self.artifacts,
            "timestamp": self.timestamp,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
