"""Silhouette and pose losses.

Two silhouette comparison families live here.  The soft-Jaccard loss
(iou_loss) is the standard overlap objective: informative while masks
overlap, flat (value 1, zero gradient) once they separate.  The smooth
silhouette loss replaces raw masks with a signed proximity field built by
low-pass filtering: proximity_map(S) = smooth(1 - S) - smooth(S), which
is -1 deep inside a mask, +1 far outside, and ramps across a band whose
width the kernel controls.  Cross-weighting each mask by the other's
proximity field yields an objective that still slopes toward alignment
when silhouettes are disjoint, as long as they sit within kernel reach.

All filtering uses replicate (edge-clamp) padding and kernels normalized
to unit DC gain, so constant masks map to exactly +-1 proximity.  The
loss gradient uses the true adjoint of the padded convolution, which
differs from the forward filter in how border pixels accumulate weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, EmptyMask, InvalidSize
from .geometry import angular_distance

# ---------------------------------------------------------------------------
# kernels and filtering


@dataclass(frozen=True, eq=False)
class Kernel:
    """Separable 2D smoothing kernel; `weights` is one 1D factor."""

    kind: str
    size: int
    sigma: float | None
    weights: np.ndarray

    def weights_2d(self):
        """Dense 2D form (outer product of the 1D factor)."""
        return np.outer(self.weights, self.weights)

    def label(self):
        if self.kind == "gaussian":
            return f"gaussian{self.size}(sigma={self.sigma:g})"
        return f"{self.kind}{self.size}"


def build_kernel(kind, size, sigma=None):
    """Build a box or gaussian kernel of odd size >= 3.

    Box kernels are uniform (2D weight 1/size^2).  Gaussian kernels are
    sampled on the integer grid and renormalized; sigma defaults to
    size / 6 so the support covers about three standard deviations.
    """
    if not isinstance(size, (int, np.integer)) or isinstance(size, bool):
        raise InvalidSize(f"kernel size must be an integer, got {size!r}")
    size = int(size)
    if size < 3 or size % 2 == 0:
        raise InvalidSize(f"kernel size must be an odd integer >= 3, got {size}")
    if kind == "box":
        if sigma is not None:
            raise ValueError("box kernels take no sigma")
        weights = np.full(size, 1.0 / size)
    elif kind == "gaussian":
        if sigma is None:
            sigma = size / 6.0
        sigma = float(sigma)
        if sigma <= 0:
            raise ValueError("gaussian sigma must be positive")
        x = np.arange(size) - (size - 1) / 2.0
        weights = np.exp(-(x**2) / (2.0 * sigma**2))
        weights /= weights.sum()
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return Kernel(kind=kind, size=size, sigma=sigma if kind == "gaussian" else None, weights=weights)


_GAIN_CACHE: dict[tuple, float] = {}


def _dc_gain(kernel):
    """The filter's response to a constant 1 image, in its own summation order.

    Dividing by this makes the normalized filter preserve constants
    bit-exactly, which the +-1 proximity saturation identities rely on.
    """
    key = (kernel.kind, kernel.size, kernel.sigma)
    if key not in _GAIN_CACHE:
        one = np.ones((1, 1))
        g = ndimage.correlate1d(one, kernel.weights, axis=0, mode="nearest")
        g = ndimage.correlate1d(g, kernel.weights, axis=1, mode="nearest")
        _GAIN_CACHE[key] = float(g[0, 0])
    return _GAIN_CACHE[key]


def smooth_image(image, kernel):
    """Separable replicate-padded convolution with exact unit DC gain."""
    image = np.asarray(image, dtype=float)
    out = ndimage.correlate1d(image, kernel.weights, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel.weights, axis=1, mode="nearest")
    return out / _dc_gain(kernel)


def _adjoint1d(y, weights, axis):
    """Adjoint of 1D replicate-padded correlation along `axis`.

    Zero-pad, correlate, then fold the out-of-range tails back onto the
    edge samples (each clamped padded position maps to its edge source).
    Kernels here are symmetric, so no weight flip is needed.
    """
    r = len(weights) // 2
    pad = [(0, 0)] * y.ndim
    pad[axis] = (r, r)
    e = ndimage.correlate1d(np.pad(y, pad), weights, axis=axis, mode="constant", cval=0.0)
    e = np.moveaxis(e, axis, 0)
    out = e[r:-r].copy()
    out[0] += e[:r].sum(axis=0)
    out[-1] += e[-r:].sum(axis=0)
    return np.moveaxis(out, 0, axis)


def smooth_image_adjoint(image, kernel):
    """Adjoint of smooth_image as a linear operator (validated against it)."""
    image = np.asarray(image, dtype=float)
    out = _adjoint1d(image, kernel.weights, axis=0)
    out = _adjoint1d(out, kernel.weights, axis=1)
    return out / _dc_gain(kernel)


def proximity_map(mask, kernel):
    """Signed proximity field smooth(1 - mask) - smooth(mask), in [-1, 1].

    Exactly -1 on an all-ones mask and +1 on an all-zeros mask; beyond
    kernel reach of any mask pixel the field saturates at +1.
    """
    mask = np.asarray(mask, dtype=float)
    return smooth_image(1.0 - mask, kernel) - smooth_image(mask, kernel)


# ---------------------------------------------------------------------------
# loss configuration


def _default_kernel():
    return build_kernel("box", 49)


@dataclass(frozen=True, eq=False)
class LossConfig:
    """Shared knobs: smoothing kernel, Jaccard epsilon, mixing weights.

    lambda_pose balances translation against rotation inside the pose
    loss; lambda_exo balances the silhouette term against the pose term
    (1.0 means silhouette only, the refinement default).
    """

    kernel: Kernel = field(default_factory=_default_kernel)
    epsilon: float = 1e-6
    lambda_pose: float = 0.5
    lambda_exo: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        for name in ("lambda_pose", "lambda_exo"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def fingerprint(self):
        return (
            f"kernel={self.kernel.label()};epsilon={self.epsilon:g};"
            f"lambda_pose={self.lambda_pose:g};lambda_exo={self.lambda_exo:g}"
        )


def report_csv(values, config):
    """Loss values as CSV rows: name, value, config fingerprint."""
    lines = ["name,value,config"]
    fp = config.fingerprint()
    for name, value in values.items():
        lines.append(f"{name},{float(value)!r},{fp}")
    return "\n".join(lines) + "\n"


def _check_pair(mask, pred):
    mask = np.asarray(mask, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if mask.shape != pred.shape:
        raise DimensionMismatch(f"mask shapes differ: {mask.shape} vs {pred.shape}")
    return mask, pred


# ---------------------------------------------------------------------------
# silhouette losses


def iou_loss(mask, pred, config=None):
    """Soft-Jaccard loss 1 - I/(U + eps) over global sums, with gradient.

    Returns (value, dvalue/dpred).  Zero gradient wherever the ground
    truth is empty within reach of the prediction, which is the known
    failure mode on disjoint silhouettes.
    """
    if config is None:
        config = LossConfig()
    mask, pred = _check_pair(mask, pred)
    inter = float(np.sum(mask * pred))
    union = float(np.sum(mask + pred - mask * pred))
    denom = union + config.epsilon
    value = 1.0 - inter / denom
    grad = -(mask * denom - inter * (1.0 - mask)) / denom**2
    return value, grad


def giou_silhouette_loss(mask, pred, config=None):
    """Generalized-IoU-style silhouette distance; evaluation only.

    1 - IoU plus the fraction of the joint bounding box covered by
    neither support.  Supports are mask > 0.5.  Built from min/max over
    supports, so it has no useful gradient and none is returned.
    """
    if config is None:
        config = LossConfig()
    mask, pred = _check_pair(mask, pred)
    sup_a = mask > 0.5
    sup_b = pred > 0.5
    if not sup_a.any() or not sup_b.any():
        raise EmptyMask("giou needs both mask supports nonempty")
    inter = int(np.sum(sup_a & sup_b))
    union_mask = sup_a | sup_b
    union = int(np.sum(union_mask))
    rows = np.nonzero(union_mask.any(axis=1))[0]
    cols = np.nonzero(union_mask.any(axis=0))[0]
    hull = int(rows[-1] - rows[0] + 1) * int(cols[-1] - cols[0] + 1)
    return (1.0 - inter / (union + config.epsilon)) + (hull - union) / hull


def smooth_silhouette_loss(mask, pred, config=None):
    """Distance-aware silhouette loss with gradient.

    value = mean(mask * proximity(pred) + pred * proximity(mask)), in
    [-2, 2], -2 at perfect overlap of full masks.  The value is affine in
    `pred`, so the gradient depends only on `mask`:
    (proximity(mask) - 2 adjoint(mask)) / N, with the adjoint of the
    replicate-padded filter (finite-difference validated).
    """
    if config is None:
        config = LossConfig()
    mask, pred = _check_pair(mask, pred)
    prox_mask = proximity_map(mask, config.kernel)
    prox_pred = proximity_map(pred, config.kernel)
    value = float(np.mean(mask * prox_pred + pred * prox_mask))
    grad = (prox_mask - 2.0 * smooth_image_adjoint(mask, config.kernel)) / mask.size
    return value, grad


class SmoothLossEvaluator:
    """Precomputed smooth loss against a fixed target mask.

    The loss is affine in the prediction, so against a fixed target the
    gradient image is a constant and the value is a dot product; this
    makes per-step refinement cost independent of the kernel size.
    Agrees with smooth_silhouette_loss to float round-off.
    """

    def __init__(self, mask, config=None):
        if config is None:
            config = LossConfig()
        self.config = config
        self.mask = np.asarray(mask, dtype=float)
        n = self.mask.size
        self.grad = (
            proximity_map(self.mask, config.kernel)
            - 2.0 * smooth_image_adjoint(self.mask, config.kernel)
        ) / n
        self._base = float(np.sum(self.mask)) / n

    def __call__(self, pred):
        pred = np.asarray(pred, dtype=float)
        if pred.shape != self.mask.shape:
            raise DimensionMismatch(f"mask shapes differ: {self.mask.shape} vs {pred.shape}")
        value = self._base + float(np.sum(pred * self.grad))
        return value, self.grad


# ---------------------------------------------------------------------------
# pose losses


def translation_loss(t_gt, t_pred):
    """Squared Euclidean distance between translations."""
    t_gt = np.asarray(t_gt, dtype=float)
    t_pred = np.asarray(t_pred, dtype=float)
    d = t_pred - t_gt
    return float(d @ d)


def translation_loss_gradient(t_gt, t_pred):
    """d(translation_loss)/d(t_pred) = 2 (t_pred - t_gt)."""
    return 2.0 * (np.asarray(t_pred, dtype=float) - np.asarray(t_gt, dtype=float))


def rotation_loss(r_gt, r_pred):
    """Geodesic angle between rotations, radians."""
    return angular_distance(r_gt, r_pred)


def rotation_loss_gradient(r_gt, r_pred):
    """d(rotation_loss)/d(r_pred); zero at the arccos clamp (saturation)."""
    r_gt = np.asarray(r_gt, dtype=float)
    r_pred = np.asarray(r_pred, dtype=float)
    x = (np.trace(r_gt @ r_pred.T) - 1.0) / 2.0
    if x >= 1.0 or x <= -1.0:
        return np.zeros((3, 3))
    return -r_gt / (2.0 * np.sqrt(1.0 - x * x))


def pose_loss(gt, pred, config=None):
    """lambda_pose * translation_loss + (1 - lambda_pose) * rotation_loss."""
    if config is None:
        config = LossConfig()
    lt = translation_loss(gt.translation, pred.translation)
    lr = rotation_loss(gt.rotation, pred.rotation)
    return config.lambda_pose * lt + (1.0 - config.lambda_pose) * lr


def combined_loss(pose_term, exo_term, config=None):
    """(1 - lambda_exo) * pose_term + lambda_exo * exo_term."""
    if config is None:
        config = LossConfig()
    return (1.0 - config.lambda_exo) * pose_term + config.lambda_exo * exo_term
