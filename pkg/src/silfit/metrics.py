"""Pose error metrics and batch evaluation.

Conventions: translation error is normalized by the ground-truth range
(NPE), orientation error is the geodesic angle in radians (OE), and
their sum is the combined measure (CPE).  The accuracy-at-X metrics use
strict thresholds: under X degrees and under X centimeters
simultaneously.  The model-space error (add) averages per-vertex
distances; its accuracy threshold is a percentage of the bounding-box
diagonal, not of the model diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, ZeroReference
from .geometry import Pose, angular_distance
from .mesh import diagonal as mesh_diagonal
from .mesh import transform_vertices


@dataclass(frozen=True)
class PosePair:
    """One evaluation item: identifier, ground truth, prediction."""

    id: str
    gt: Pose
    pred: Pose


def npe(gt, pred):
    """Normalized position error ||t_pred - t_gt|| / ||t_gt||."""
    ref = float(np.linalg.norm(gt.translation))
    if ref == 0.0:
        raise ZeroReference("ground-truth translation norm is zero")
    return float(np.linalg.norm(pred.translation - gt.translation)) / ref


def oe(gt, pred):
    """Orientation error: geodesic angle in radians."""
    return angular_distance(gt.rotation, pred.rotation)


def cpe(gt, pred):
    """Combined pose error npe + oe."""
    return npe(gt, pred) + oe(gt, pred)


def accuracy_at(gt, pred, threshold):
    """True when oe < threshold degrees and ||dt|| < threshold cm, both strict."""
    angle_ok = oe(gt, pred) < math.radians(threshold)
    dist_ok = float(np.linalg.norm(pred.translation - gt.translation)) < threshold / 100.0
    return bool(angle_ok and dist_ok)


def add(gt, pred, mesh, stride=1):
    """Mean per-vertex distance between the mesh posed by gt and by pred.

    `stride` deterministically subsamples vertices (every stride-th,
    starting at 0) for large models; default uses all vertices.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    v_gt = transform_vertices(mesh, gt).vertices[::stride]
    v_pred = transform_vertices(mesh, pred).vertices[::stride]
    if len(v_gt) == 0:
        raise EmptyInput("no vertices to compare")
    return float(np.linalg.norm(v_pred - v_gt, axis=1).mean())


def pose6d_within(gt, pred, mesh, threshold_percent, stride=1):
    """True when add is under threshold_percent of the AABB diagonal (strict)."""
    return add(gt, pred, mesh, stride=stride) < (threshold_percent / 100.0) * mesh_diagonal(mesh)


def accuracy_fraction(pairs, threshold):
    """Fraction of pairs accurate at the given degree/centimeter threshold."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no pose pairs to evaluate")
    return sum(accuracy_at(p.gt, p.pred, threshold) for p in pairs) / len(pairs)


def pose6d_accuracy(pairs, mesh, threshold_percent, stride=1):
    """Fraction of pairs whose model-space error is under the diagonal fraction."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no pose pairs to evaluate")
    return sum(pose6d_within(p.gt, p.pred, mesh, threshold_percent, stride=stride) for p in pairs) / len(pairs)


@dataclass(frozen=True)
class MetricReport:
    """Aggregates over a pair set; accuracies are fractions in [0, 1]."""

    npe: float
    oe_radians: float
    cpe: float
    acc5: float
    acc10: float
    pose6d_5: float
    pose6d_10: float
    n: int

    # column order follows the standard results-table layout
    CSV_COLUMNS = ("npe", "oe", "cpe", "acc5", "acc10", "pose6d_5", "pose6d_10")

    def csv_row(self):
        values = (self.npe, self.oe_radians, self.cpe, self.acc5, self.acc10, self.pose6d_5, self.pose6d_10)
        return ",".join(repr(float(v)) for v in values)

    def to_csv(self):
        return ",".join(self.CSV_COLUMNS) + "\n" + self.csv_row() + "\n"


def evaluate_pairs(pairs, mesh, stride=1):
    """MetricReport over an iterable of PosePairs; EmptyInput when empty."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no pose pairs to evaluate")
    npes, oes, cpes = [], [], []
    acc5 = acc10 = p5 = p10 = 0
    for pair in pairs:
        e_n = npe(pair.gt, pair.pred)
        e_o = oe(pair.gt, pair.pred)
        npes.append(e_n)
        oes.append(e_o)
        cpes.append(e_n + e_o)
        acc5 += accuracy_at(pair.gt, pair.pred, 5.0)
        acc10 += accuracy_at(pair.gt, pair.pred, 10.0)
        p5 += pose6d_within(pair.gt, pair.pred, mesh, 5.0, stride=stride)
        p10 += pose6d_within(pair.gt, pair.pred, mesh, 10.0, stride=stride)
    n = len(pairs)
    return MetricReport(
        npe=float(np.mean(npes)),
        oe_radians=float(np.mean(oes)),
        cpe=float(np.mean(cpes)),
        acc5=acc5 / n,
        acc10=acc10 / n,
        pose6d_5=p5 / n,
        pose6d_10=p10 / n,
        n=n,
    )
