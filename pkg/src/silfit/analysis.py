"""Loss-landscape characterization around a ground-truth pose.

landscape_sweep displaces the pose over a grid of translation and
rotation offsets, renders each displaced silhouette, scores it against
the ground-truth silhouette under several losses, min-max normalizes
each loss over the sweep, and accumulates the normalized values into a
2D histogram indexed by rotation-angle and translation-distance bins.
Flat plateaus show up as few distinct quantized levels; smooth slopes as
many.

interpolation_experiment walks the geodesic from a far pose to the
ground truth and reports each loss along the way, which makes basin
width directly visible: overlap losses stay flat until silhouettes
touch, distance-aware losses slope within kernel reach.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .camera import DEFAULT_Z_NEAR
from .errors import NothingVisible
from .geometry import Pose, geodesic_interpolate, rotation_exp
from .losses import LossConfig, SmoothLossEvaluator, build_kernel, giou_silhouette_loss, iou_loss
from .mesh import transform_vertices
from .rasterizer import rasterize_hard

LANDSCAPE_LOSSES = ("iou", "smooth", "smooth_gauss", "giou")


@dataclass(frozen=True)
class LandscapeGrid:
    """Sampled displacement grid: all pairs of one translation and one rotation offset.

    rotation_offsets are axis-angle vectors applied on the left of the
    ground-truth rotation.  When the full pair product exceeds
    sample_budget, a seeded subset is drawn (the zero displacement, if
    present, is always kept).
    """

    translation_offsets: np.ndarray
    rotation_offsets: np.ndarray
    bins_translation: int = 20
    bins_rotation: int = 20
    sample_budget: int | None = 3000
    seed: int = 0

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.translation_offsets, dtype=float))
        r = np.atleast_2d(np.asarray(self.rotation_offsets, dtype=float))
        if t.shape[1] != 3 or r.shape[1] != 3:
            raise ValueError("offsets must be (n, 3) arrays")
        if self.bins_translation < 1 or self.bins_rotation < 1:
            raise ValueError("bin counts must be >= 1")
        if self.sample_budget is not None and self.sample_budget < 1:
            raise ValueError("sample_budget must be >= 1 or None")
        object.__setattr__(self, "translation_offsets", t)
        object.__setattr__(self, "rotation_offsets", r)


def default_grid(
    translation_extent=0.3,
    translation_steps=7,
    rotation_extent_degrees=30.0,
    rotation_steps=7,
    bins=20,
    sample_budget=3000,
    seed=0,
):
    """Symmetric per-axis grid: +-extent in `steps` steps per axis, then all triples.

    Odd step counts contain the zero displacement exactly once.
    """
    taxis = np.linspace(-translation_extent, translation_extent, translation_steps)
    raxis = np.radians(np.linspace(-rotation_extent_degrees, rotation_extent_degrees, rotation_steps))
    tg = np.stack(np.meshgrid(taxis, taxis, taxis, indexing="ij"), axis=-1).reshape(-1, 3)
    rg = np.stack(np.meshgrid(raxis, raxis, raxis, indexing="ij"), axis=-1).reshape(-1, 3)
    return LandscapeGrid(
        translation_offsets=tg,
        rotation_offsets=rg,
        bins_translation=bins,
        bins_rotation=bins,
        sample_budget=sample_budget,
        seed=seed,
    )


@dataclass
class BinnedLossSurface:
    """Normalized loss histogram over (rotation bin, translation bin).

    values holds sums of min-max normalized losses, counts the number of
    samples per cell.  degenerate_normalization marks a constant loss
    (max == min over the sweep); its values are emitted as zeros.
    """

    loss_name: str
    values: np.ndarray
    counts: np.ndarray
    edges_rotation: np.ndarray
    edges_translation: np.ndarray
    degenerate_normalization: bool = False

    def cell_means(self):
        """Per-cell mean normalized loss; NaN where no sample landed."""
        with np.errstate(invalid="ignore"):
            return np.where(self.counts > 0, self.values / np.maximum(self.counts, 1), np.nan)


def _loss_table(target, losses, config):
    fns = {}
    for name in losses:
        if name == "iou":
            fns[name] = lambda pred, c=config: iou_loss(target, pred, c)[0]
        elif name == "smooth":
            ev = SmoothLossEvaluator(target, LossConfig(kernel=build_kernel("box", 49), epsilon=config.epsilon))
            fns[name] = lambda pred, e=ev: e(pred)[0]
        elif name == "smooth_gauss":
            ev = SmoothLossEvaluator(
                target, LossConfig(kernel=build_kernel("gaussian", 69), epsilon=config.epsilon)
            )
            fns[name] = lambda pred, e=ev: e(pred)[0]
        elif name == "giou":
            fns[name] = lambda pred, c=config: giou_silhouette_loss(target, pred, c)
        else:
            raise ValueError(f"unknown landscape loss {name!r}; pick from {LANDSCAPE_LOSSES}")
    return fns


def _select_samples(grid):
    """Flat (translation index, rotation index) pairs, budget-subsampled.

    Returned in ascending grid order so accumulation order is fixed.
    """
    nt = len(grid.translation_offsets)
    nr = len(grid.rotation_offsets)
    total = nt * nr
    t_zero = np.nonzero((grid.translation_offsets == 0.0).all(axis=1))[0]
    r_zero = np.nonzero((grid.rotation_offsets == 0.0).all(axis=1))[0]
    zero_flat = int(t_zero[0] * nr + r_zero[0]) if len(t_zero) and len(r_zero) else None
    if grid.sample_budget is None or total <= grid.sample_budget:
        flat = np.arange(total)
    else:
        rng = np.random.default_rng(grid.seed)
        pool = np.arange(total)
        keep = grid.sample_budget
        if zero_flat is not None:
            pool = pool[pool != zero_flat]
            keep -= 1
        chosen = rng.choice(pool, size=keep, replace=False)
        if zero_flat is not None:
            chosen = np.concatenate((chosen, [zero_flat]))
        flat = np.sort(chosen)
    return np.stack((flat // nr, flat % nr), axis=1)


def displaced_pose(gt_pose, translation_offset, rotation_offset):
    """Apply a displacement: left-multiplied rotation, added translation."""
    return Pose(
        rotation_exp(rotation_offset) @ gt_pose.rotation,
        gt_pose.translation + np.asarray(translation_offset, dtype=float),
    )


def landscape_sweep(
    mesh,
    camera,
    gt_pose,
    grid=None,
    losses=("iou", "smooth"),
    config=None,
    threads=None,
    z_near=DEFAULT_Z_NEAR,
):
    """Evaluate losses over displaced poses and bin them; see module docstring.

    Out-of-frustum displacements render as empty silhouettes rather than
    failing the sweep.  Grid points are independent and evaluated in
    parallel across `threads` workers (default: all cores); reduction
    happens in fixed grid order, so results do not depend on the thread
    count.
    """
    if grid is None:
        grid = default_grid()
    if config is None:
        config = LossConfig()
    target = rasterize_hard(transform_vertices(mesh, gt_pose), camera, z_near)
    fns = _loss_table(target, losses, config)
    samples = _select_samples(grid)

    def evaluate(sample):
        it, ir = sample
        pose = displaced_pose(gt_pose, grid.translation_offsets[it], grid.rotation_offsets[ir])
        try:
            pred = rasterize_hard(transform_vertices(mesh, pose), camera, z_near)
        except NothingVisible:
            pred = np.zeros_like(target)
        return [fns[name](pred) for name in losses]

    if threads is None:
        threads = os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = np.array(list(pool.map(evaluate, samples, chunksize=64)))
    else:
        raw = np.array([evaluate(s) for s in samples])

    dt = np.linalg.norm(grid.translation_offsets[samples[:, 0]], axis=1)
    dr = np.linalg.norm(grid.rotation_offsets[samples[:, 1]], axis=1)
    t_max = float(dt.max())
    r_max = float(dr.max())
    t_bin = _bin_index(dt, t_max, grid.bins_translation)
    r_bin = _bin_index(dr, r_max, grid.bins_rotation)
    edges_t = np.linspace(0.0, t_max, grid.bins_translation + 1)
    edges_r = np.linspace(0.0, r_max, grid.bins_rotation + 1)

    surfaces = {}
    for j, name in enumerate(losses):
        col = raw[:, j]
        lo, hi = float(col.min()), float(col.max())
        degenerate = hi == lo
        norm = np.zeros_like(col) if degenerate else (col - lo) / (hi - lo)
        values = np.zeros((grid.bins_rotation, grid.bins_translation))
        counts = np.zeros((grid.bins_rotation, grid.bins_translation), dtype=np.int64)
        np.add.at(values, (r_bin, t_bin), norm)
        np.add.at(counts, (r_bin, t_bin), 1)
        surfaces[name] = BinnedLossSurface(
            loss_name=name,
            values=values,
            counts=counts,
            edges_rotation=edges_r,
            edges_translation=edges_t,
            degenerate_normalization=degenerate,
        )
    return surfaces


def _bin_index(d, dmax, bins):
    if dmax == 0.0:
        return np.zeros(len(d), dtype=np.int64)
    return np.minimum((d / dmax * bins).astype(np.int64), bins - 1)


def distinct_level_count(surface, levels=256, axis=None):
    """Count of distinct quantized levels in the binned surface.

    axis=None quantizes every populated cell's mean and counts unique
    levels over the whole surface.  axis="rotation" scans each
    translation column along the rotation axis and sums the per-column
    distinct-level counts: the total number of color steps a heat map
    shows when read in the rotation direction.  A plateaued loss
    produces constant columns and a low count.
    """
    if axis not in (None, "rotation"):
        raise ValueError("axis must be None or 'rotation'")
    populated = surface.counts > 0
    means = np.zeros_like(surface.values)
    np.divide(surface.values, surface.counts, out=means, where=populated)
    q = np.round(np.clip(means, 0.0, 1.0) * (levels - 1)).astype(np.int64)
    if axis == "rotation":
        total = 0
        for j in range(q.shape[1]):
            col = q[populated[:, j], j]
            if col.size:
                total += int(len(np.unique(col)))
        return total
    vals = q[populated]
    return int(len(np.unique(vals)))


def interpolation_experiment(
    mesh,
    camera,
    gt_pose,
    far_pose,
    steps=50,
    losses=("iou", "smooth"),
    config=None,
    z_near=DEFAULT_Z_NEAR,
):
    """Losses along the geodesic from far_pose (lambda 0) to gt_pose (lambda 1).

    Returns one dict per step with key "lambda" and one key per loss;
    endpoints are exact and the row count equals `steps`.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if config is None:
        config = LossConfig()
    target = rasterize_hard(transform_vertices(mesh, gt_pose), camera, z_near)
    fns = _loss_table(target, losses, config)
    rows = []
    for k in range(steps):
        lam = k / (steps - 1)
        pose = geodesic_interpolate(far_pose, gt_pose, lam)
        try:
            pred = rasterize_hard(transform_vertices(mesh, pose), camera, z_near)
        except NothingVisible:
            pred = np.zeros_like(target)
        row = {"lambda": lam}
        for name in losses:
            row[name] = float(fns[name](pred))
        rows.append(row)
    return rows


def random_pose_perturbations(pose, n, max_rotation, max_translation, seed=0):
    """n poses jittered from `pose`: rotation angle and translation norm
    drawn uniformly up to the given bounds, directions uniform on the sphere."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(0.0, max_rotation)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        dist = rng.uniform(0.0, max_translation)
        out.append(
            Pose(rotation_exp(axis * angle) @ pose.rotation, pose.translation + direction * dist)
        )
    return out
