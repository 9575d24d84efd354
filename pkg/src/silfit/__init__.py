"""Silhouette-based 6DOF pose refinement by differentiable rendering.

The package renders binary object silhouettes with an analytic rasterizer,
compares them to observed masks with smoothed overlap losses, and descends
the resulting pose gradients.  `SilhouettePoseRefiner` is the high-level
estimator; the functional layer underneath is importable piecemeal.
"""

from .analysis import (
    BinnedLossSurface,
    LandscapeGrid,
    default_grid,
    displaced_pose,
    distinct_level_count,
    interpolation_experiment,
    landscape_sweep,
    random_pose_perturbations,
)
from .camera import CameraIntrinsics, intrinsics_from_fov, project_point, project_vertices
from .errors import (
    BehindCamera,
    DegenerateInput,
    DimensionMismatch,
    EmptyInput,
    EmptyMask,
    EmptyMesh,
    InvalidSize,
    NothingVisible,
    ParseError,
    SilfitError,
    StaleTape,
    VanishedGradient,
    ZeroReference,
)
from .estimator import SilhouettePoseRefiner
from .geometry import (
    Pose,
    angular_distance,
    compose,
    geodesic_interpolate,
    invert,
    matrix_to_rot6d,
    rot6d_gradient,
    rot6d_to_matrix,
    rotation_exp,
    rotation_log,
)
from .losses import (
    Kernel,
    LossConfig,
    SmoothLossEvaluator,
    build_kernel,
    combined_loss,
    giou_silhouette_loss,
    iou_loss,
    pose_loss,
    proximity_map,
    report_csv,
    rotation_loss,
    smooth_image,
    smooth_silhouette_loss,
    translation_loss,
)
from .mesh import (
    TriangleMesh,
    load_obj,
    make_asymmetric_rig,
    make_box,
    make_icosphere,
    make_tetrahedron,
    save_obj,
    transform_vertices,
)
from .metrics import (
    MetricReport,
    PosePair,
    accuracy_at,
    accuracy_fraction,
    add,
    cpe,
    evaluate_pairs,
    npe,
    oe,
    pose6d_accuracy,
    pose6d_within,
)
from .rasterizer import (
    GradientTape,
    SoftRasterConfig,
    backprop_to_pose,
    rasterize_hard,
    rasterize_soft,
    soft_coverage,
    triangle_coverage,
)
from .refine import GradcheckReport, RefineConfig, RefineTrace, gradcheck, refine_pose

__version__ = "0.1.0"

__all__ = [
    "BehindCamera",
    "BinnedLossSurface",
    "CameraIntrinsics",
    "DegenerateInput",
    "DimensionMismatch",
    "EmptyInput",
    "EmptyMask",
    "EmptyMesh",
    "GradcheckReport",
    "GradientTape",
    "InvalidSize",
    "Kernel",
    "LandscapeGrid",
    "LossConfig",
    "MetricReport",
    "NothingVisible",
    "ParseError",
    "Pose",
    "PosePair",
    "RefineConfig",
    "RefineTrace",
    "SilfitError",
    "SilhouettePoseRefiner",
    "SmoothLossEvaluator",
    "SoftRasterConfig",
    "StaleTape",
    "TriangleMesh",
    "VanishedGradient",
    "ZeroReference",
    "accuracy_at",
    "accuracy_fraction",
    "add",
    "angular_distance",
    "backprop_to_pose",
    "build_kernel",
    "combined_loss",
    "compose",
    "cpe",
    "default_grid",
    "displaced_pose",
    "distinct_level_count",
    "evaluate_pairs",
    "geodesic_interpolate",
    "giou_silhouette_loss",
    "gradcheck",
    "interpolation_experiment",
    "intrinsics_from_fov",
    "invert",
    "iou_loss",
    "landscape_sweep",
    "load_obj",
    "make_asymmetric_rig",
    "make_box",
    "make_icosphere",
    "make_tetrahedron",
    "matrix_to_rot6d",
    "npe",
    "oe",
    "pose6d_accuracy",
    "pose6d_within",
    "pose_loss",
    "project_point",
    "project_vertices",
    "proximity_map",
    "random_pose_perturbations",
    "rasterize_hard",
    "rasterize_soft",
    "refine_pose",
    "report_csv",
    "rot6d_gradient",
    "rot6d_to_matrix",
    "rotation_exp",
    "rotation_log",
    "rotation_loss",
    "save_obj",
    "smooth_image",
    "smooth_silhouette_loss",
    "soft_coverage",
    "transform_vertices",
    "translation_loss",
    "triangle_coverage",
]
