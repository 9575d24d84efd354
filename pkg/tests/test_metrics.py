"""Pose-error metrics and their aggregates."""

import math

import numpy as np
import pytest

from silfit import (
    EmptyInput,
    Pose,
    PosePair,
    ZeroReference,
    accuracy_at,
    accuracy_fraction,
    add,
    angular_distance,
    compose,
    evaluate_pairs,
    npe,
    oe,
    cpe,
    pose6d_accuracy,
    pose6d_within,
    rotation_exp,
)
from silfit.mesh import diagonal


def _random_pose(rng, t_scale=1.0):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    r = rotation_exp(axis * rng.uniform(0.0, math.pi - 1e-3))
    t = rng.normal(size=3) * t_scale
    if np.linalg.norm(t) < 1e-6:
        t = np.array([0.0, 0.0, 1.0])
    return Pose(r, t)


def test_metrics_match_independent_recomputation():
    rng = np.random.default_rng(71)
    for _ in range(1000):
        gt = _random_pose(rng)
        pred = _random_pose(rng)
        ref_npe = math.sqrt(float(np.sum((pred.translation - gt.translation) ** 2))) / math.sqrt(
            float(np.sum(gt.translation**2))
        )
        assert abs(npe(gt, pred) - ref_npe) <= 1e-12
        c = (np.trace(gt.rotation @ pred.rotation.T) - 1.0) / 2.0
        ref_oe = math.acos(min(1.0, max(-1.0, c)))
        assert abs(oe(gt, pred) - ref_oe) <= 1e-12
        assert cpe(gt, pred) == npe(gt, pred) + oe(gt, pred)


def test_metric_examples():
    gt = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
    pred = Pose(np.eye(3), np.array([0.0, 0.0, 1.1]))
    assert abs(npe(gt, pred) - 0.1) <= 1e-12
    # 2% position error plus a 0.059 rad turn add up in the combined error
    pred = Pose(rotation_exp(np.array([0.059, 0.0, 0.0])), np.array([0.02, 0.0, 1.0]))
    assert abs(npe(gt, pred) - 0.020) <= 1e-12
    assert abs(oe(gt, pred) - 0.059) <= 1e-12
    assert abs(cpe(gt, pred) - 0.079) <= 1e-12


def test_zero_reference_raises():
    gt = Pose(np.eye(3), np.zeros(3))
    pred = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ZeroReference):
        npe(gt, pred)
    with pytest.raises(ZeroReference):
        cpe(gt, pred)


def test_accuracy_thresholds_straddle():
    gt = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
    pred = Pose(rotation_exp(np.array([math.radians(6.0), 0.0, 0.0])), np.array([0.005, 0.0, 1.0]))
    assert not accuracy_at(gt, pred, 5.0)
    assert accuracy_at(gt, pred, 10.0)


def test_accuracy_boundary_is_strict():
    gt = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
    # exactly 5 cm off: the strict comparison rejects it
    pred = Pose(np.eye(3), np.array([0.05, 0.0, 1.0]))
    assert not accuracy_at(gt, pred, 5.0)
    pred = Pose(np.eye(3), np.array([0.049, 0.0, 1.0]))
    assert accuracy_at(gt, pred, 5.0)


def test_accuracy_monotone_in_threshold():
    rng = np.random.default_rng(73)
    for _ in range(500):
        gt = _random_pose(rng, t_scale=0.2)
        pred = _random_pose(rng, t_scale=0.2)
        if accuracy_at(gt, pred, 5.0):
            assert accuracy_at(gt, pred, 10.0)


def test_add_translation_offset_exact(rig):
    rng = np.random.default_rng(79)
    gt = _random_pose(rng)
    d = np.array([0.03, -0.04, 0.12])
    pred = Pose(gt.rotation, gt.translation + d)
    assert abs(add(gt, pred, rig) - float(np.linalg.norm(d))) <= 1e-12


def test_add_matches_brute_force(rig):
    rng = np.random.default_rng(83)
    gt = _random_pose(rng)
    pred = _random_pose(rng)
    total = 0.0
    for v in rig.vertices:
        a = gt.rotation @ v + gt.translation
        b = pred.rotation @ v + pred.translation
        total += math.sqrt(float(np.sum((a - b) ** 2)))
    assert abs(add(gt, pred, rig) - total / len(rig.vertices)) <= 1e-12


def test_add_invariant_under_common_motion(rig):
    rng = np.random.default_rng(89)
    gt = _random_pose(rng)
    pred = _random_pose(rng)
    g = _random_pose(rng)
    before = add(gt, pred, rig)
    after = add(compose(g, gt), compose(g, pred), rig)
    assert abs(before - after) <= 1e-9


def test_add_stride_subsamples(rig):
    rng = np.random.default_rng(97)
    gt = _random_pose(rng)
    pred = _random_pose(rng)
    v_gt = (rig.vertices @ gt.rotation.T) + gt.translation
    v_pred = (rig.vertices @ pred.rotation.T) + pred.translation
    ref = float(np.linalg.norm(v_pred[::3] - v_gt[::3], axis=1).mean())
    assert abs(add(gt, pred, rig, stride=3) - ref) <= 1e-12
    with pytest.raises(ValueError):
        add(gt, pred, rig, stride=0)


def test_pose6d_within_diagonal_fraction(rig):
    rng = np.random.default_rng(101)
    gt = _random_pose(rng)
    diag = diagonal(rig)
    close = Pose(gt.rotation, gt.translation + np.array([0.01 * diag, 0.0, 0.0]))
    far = Pose(gt.rotation, gt.translation + np.array([0.2 * diag, 0.0, 0.0]))
    assert pose6d_within(gt, close, rig, 5.0)
    assert not pose6d_within(gt, far, rig, 5.0)
    assert not pose6d_within(gt, far, rig, 10.0)


def test_aggregates_and_empty_input(rig):
    gt = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
    good = Pose(np.eye(3), np.array([0.001, 0.0, 1.0]))
    bad = Pose(rotation_exp(np.array([1.0, 0.0, 0.0])), np.array([0.5, 0.0, 1.0]))
    pairs = [
        PosePair(id="a", gt=gt, pred=good),
        PosePair(id="b", gt=gt, pred=good),
        PosePair(id="c", gt=gt, pred=bad),
        PosePair(id="d", gt=gt, pred=bad),
    ]
    assert accuracy_fraction(pairs, 5.0) == 0.5
    assert pose6d_accuracy(pairs, rig, 5.0) == 0.5
    for fn in (lambda: accuracy_fraction([], 5.0), lambda: pose6d_accuracy([], rig, 5.0), lambda: evaluate_pairs([], rig)):
        with pytest.raises(EmptyInput):
            fn()


def test_evaluate_pairs_matches_manual(rig):
    rng = np.random.default_rng(103)
    pairs = [
        PosePair(id=str(i), gt=_random_pose(rng, 0.3), pred=_random_pose(rng, 0.3))
        for i in range(20)
    ]
    report = evaluate_pairs(pairs, rig)
    assert report.n == 20
    assert abs(report.npe - np.mean([npe(p.gt, p.pred) for p in pairs])) <= 1e-12
    assert abs(report.oe_radians - np.mean([oe(p.gt, p.pred) for p in pairs])) <= 1e-12
    assert abs(report.cpe - np.mean([cpe(p.gt, p.pred) for p in pairs])) <= 1e-12
    assert report.acc5 == accuracy_fraction(pairs, 5.0)
    assert report.acc10 == accuracy_fraction(pairs, 10.0)
    assert report.pose6d_5 == pose6d_accuracy(pairs, rig, 5.0)
    assert report.pose6d_10 == pose6d_accuracy(pairs, rig, 10.0)


def test_report_csv_roundtrip(rig):
    rng = np.random.default_rng(107)
    pairs = [PosePair(id="x", gt=_random_pose(rng), pred=_random_pose(rng))]
    report = evaluate_pairs(pairs, rig)
    text = report.to_csv()
    header, row = text.strip().split("\n")
    assert header == "npe,oe,cpe,acc5,acc10,pose6d_5,pose6d_10"
    values = [float(v) for v in row.split(",")]
    assert values[0] == report.npe
    assert values[1] == report.oe_radians
    assert values[2] == report.cpe
