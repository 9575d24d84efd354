"""scikit-learn style estimator wrapping the refinement loop.

Pose refinement is fit-shaped: the observed silhouette is the data, the
pose is the fitted parameter.  Wrapping it as an estimator buys the
usual ecosystem mechanics (get_params/set_params, clone, grid search
over hyperparameters) for free.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .geometry import Pose
from .losses import iou_loss
from .mesh import diagonal, transform_vertices
from .rasterizer import SoftRasterConfig, rasterize_hard, rasterize_soft
from .refine import RefineConfig, refine_pose
from .validation import check_camera, check_mesh, check_pose, check_silhouette


class SilhouettePoseRefiner(BaseEstimator):
    """Fit a 6DOF pose to an observed binary silhouette.

    Parameters mirror RefineConfig; `loss` is one of "iou", "smooth",
    "smooth_gauss".  After fit, the estimate is in `pose_` and the full
    optimization record in `trace_`.

    >>> est = SilhouettePoseRefiner(mesh=mesh, camera=cam).fit(target)
    >>> est.pose_.translation
    """

    def __init__(
        self,
        mesh=None,
        camera=None,
        loss="smooth",
        kernel_size=None,
        steps=300,
        learning_rate=3e-3,
        beta1=0.9,
        beta2=0.999,
        adam_eps=1e-8,
        convergence_tol=1e-12,
        sigma=1.5,
        truncation_radius=12.0,
        epsilon=1e-6,
        lambda_exo=1.0,
        lambda_pose=0.5,
    ):
        self.mesh = mesh
        self.camera = camera
        self.loss = loss
        self.kernel_size = kernel_size
        self.steps = steps
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.convergence_tol = convergence_tol
        self.sigma = sigma
        self.truncation_radius = truncation_radius
        self.epsilon = epsilon
        self.lambda_exo = lambda_exo
        self.lambda_pose = lambda_pose

    def _refine_config(self):
        return RefineConfig(
            loss_kind=self.loss,
            steps=self.steps,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            convergence_tol=self.convergence_tol,
            kernel_size=self.kernel_size,
            epsilon=self.epsilon,
            lambda_exo=self.lambda_exo,
            lambda_pose=self.lambda_pose,
            raster=SoftRasterConfig(sigma=self.sigma, truncation_radius=self.truncation_radius),
        )

    def _default_init(self):
        """Object centered on the optical axis, two diagonals away."""
        return Pose(np.eye(3), np.array([0.0, 0.0, 2.0 * diagonal(self.mesh)]))

    def fit(self, X, y=None, init_pose=None, prior_pose=None):
        """Refine a pose against the target silhouette X (H x W, [0, 1]).

        init_pose defaults to a frontal view at a plausible distance;
        supply one whenever the true pose is roughly known.  prior_pose
        feeds the mixed objective when lambda_exo < 1.
        """
        mesh = check_mesh(self.mesh)
        camera = check_camera(self.camera)
        X = check_silhouette(X, name="X")
        if X.shape != (camera.height, camera.width):
            raise ValueError(
                f"X shape {X.shape} does not match camera {(camera.height, camera.width)}"
            )
        init = check_pose(init_pose) if init_pose is not None else self._default_init()
        if prior_pose is not None:
            check_pose(prior_pose, name="prior_pose")
        trace = refine_pose(mesh, camera, X, init, self._refine_config(), prior=prior_pose)
        self.pose_ = trace.final_pose
        self.trace_ = trace
        self.n_iter_ = len(trace)
        self.termination_ = trace.termination
        return self

    def _check_fitted(self):
        if not hasattr(self, "pose_"):
            raise NotFittedError("this SilhouettePoseRefiner is not fitted yet; call fit first")

    def predict(self, X=None):
        """Hard silhouette rendered at the fitted pose (X is ignored)."""
        self._check_fitted()
        return rasterize_hard(transform_vertices(self.mesh, self.pose_), self.camera)

    def render(self, pose=None, soft=False):
        """Render at an arbitrary pose (default: the fitted one)."""
        if pose is None:
            self._check_fitted()
            pose = self.pose_
        posed = transform_vertices(check_mesh(self.mesh), pose)
        if soft:
            cfg = SoftRasterConfig(sigma=self.sigma, truncation_radius=self.truncation_radius)
            return rasterize_soft(posed, self.camera, cfg)[0]
        return rasterize_hard(posed, self.camera)

    def score(self, X, y=None):
        """Negative IoU loss of the fitted silhouette against X (higher is better)."""
        self._check_fitted()
        X = check_silhouette(X, name="X")
        value, _ = iou_loss(X, self.predict())
        return -value
