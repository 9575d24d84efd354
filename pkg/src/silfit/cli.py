"""Command-line interface.

Subcommands: render, refine, landscape, lerp, gradcheck, eval.  Every
command writes a .manifest.json next to its primary output recording the
command line, seed, config fingerprints, and SHA-256 checksums of the
artifacts, so identical invocations can be verified byte-for-byte.

Exit codes: 0 success, 1 gradcheck below threshold, 2 parse/IO failure,
3 nothing visible (out-of-frustum pose), 4 vanished gradient.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import io as sio
from .analysis import (
    LANDSCAPE_LOSSES,
    default_grid,
    interpolation_experiment,
    landscape_sweep,
    random_pose_perturbations,
)
from .camera import intrinsics_from_fov
from .errors import (
    DimensionMismatch,
    EmptyInput,
    EmptyMask,
    EmptyMesh,
    InvalidSize,
    NothingVisible,
    ParseError,
    VanishedGradient,
    ZeroReference,
)
from .losses import LossConfig
from .mesh import load_obj, transform_vertices
from .metrics import evaluate_pairs
from .rasterizer import SoftRasterConfig, rasterize_hard, rasterize_soft
from .refine import LOSS_KINDS, RefineConfig, gradcheck, refine_pose

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_PARSE = 2
EXIT_NOTHING_VISIBLE = 3
EXIT_VANISHED = 4

_PARSE_ERRORS = (
    ParseError,
    OSError,
    EmptyMesh,
    EmptyMask,
    EmptyInput,
    InvalidSize,
    DimensionMismatch,
    ZeroReference,
    ValueError,
    KeyError,
    json.JSONDecodeError,
)


def _camera_from_args(args):
    if args.camera:
        return sio.read_camera(args.camera)
    if args.fov is None:
        raise ValueError("provide --camera or --fov with --width/--height")
    return intrinsics_from_fov(args.fov, args.width, args.height)


def _add_camera_flags(parser):
    parser.add_argument("--camera", help="camera intrinsics JSON")
    parser.add_argument("--fov", type=float, help="horizontal field of view in degrees (alternative to --camera)")
    parser.add_argument("--width", type=int, default=320, help="image width for --fov (default 320)")
    parser.add_argument("--height", type=int, default=240, help="image height for --fov (default 240)")


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="seed recorded in the manifest and used where noted")


def _manifest(args, command, configs=None):
    arguments = {k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None}
    return sio.RunManifest(command=command, arguments=arguments, seed=args.seed, configs=configs or {})


def cmd_render(args):
    mesh = load_obj(args.mesh)
    pose = sio.read_pose(args.pose)
    camera = _camera_from_args(args)
    posed = transform_vertices(mesh, pose)
    if args.soft:
        cfg = SoftRasterConfig(sigma=args.sigma, truncation_radius=args.truncation)
        image, _ = rasterize_soft(posed, camera, cfg)
        configs = {"raster": f"soft;sigma={cfg.sigma:g};truncation={cfg.truncation_radius:g}"}
    else:
        image = rasterize_hard(posed, camera)
        configs = {"raster": "hard"}
    sio.write_pgm(args.out, image)
    manifest = _manifest(args, "render", configs)
    manifest.add_artifact(args.out)
    manifest.write(args.out + ".manifest.json")
    return EXIT_OK


def cmd_refine(args):
    mesh = load_obj(args.mesh)
    camera = _camera_from_args(args)
    target = sio.read_mask(args.target)
    init = sio.read_pose(args.init_pose)
    prior = sio.read_pose(args.prior_pose) if args.prior_pose else None
    cfg = RefineConfig(
        loss_kind=args.loss,
        steps=args.steps,
        learning_rate=args.lr,
        convergence_tol=args.convergence_tol,
        kernel_size=args.kernel_size,
        epsilon=args.epsilon,
        lambda_exo=args.lambda_exo,
        raster=SoftRasterConfig(sigma=args.sigma, truncation_radius=args.truncation),
    )
    trace = refine_pose(mesh, camera, target, init, cfg, prior=prior)
    sio.write_trace_csv(args.out_trace, trace)
    sio.write_pose(args.out_pose, trace.final_pose)
    manifest = _manifest(args, "refine", {"loss": cfg.loss_config().fingerprint()})
    manifest.add_artifact(args.out_trace)
    manifest.add_artifact(args.out_pose)
    manifest.write(args.out_pose + ".manifest.json")
    print(
        f"refined in {len(trace)} step(s), termination={trace.termination}, "
        f"final loss {float(trace.losses[-1])!r}"
    )
    return EXIT_OK


def _grid_from_config(args):
    overrides = {}
    if args.grid_config:
        with open(args.grid_config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    overrides.setdefault("seed", args.seed)
    return default_grid(**overrides)


def cmd_landscape(args):
    mesh = load_obj(args.mesh)
    camera = _camera_from_args(args)
    pose = sio.read_pose(args.pose)
    losses = [s.strip() for s in args.losses.split(",") if s.strip()]
    grid = _grid_from_config(args)
    surfaces = landscape_sweep(
        mesh, camera, pose, grid, losses=losses, threads=args.threads
    )
    manifest = _manifest(args, "landscape", {"loss": LossConfig().fingerprint()})
    meta = {
        "losses": losses,
        "bins_rotation": grid.bins_rotation,
        "bins_translation": grid.bins_translation,
        "sample_budget": grid.sample_budget,
        "seed": grid.seed,
    }
    for name, surface in surfaces.items():
        values_path = f"{args.out}_{name}_values.csv"
        counts_path = f"{args.out}_{name}_counts.csv"
        sio.write_matrix_csv(values_path, surface.values)
        sio.write_matrix_csv(counts_path, surface.counts.astype(float))
        manifest.add_artifact(values_path)
        manifest.add_artifact(counts_path)
        meta[f"degenerate_normalization_{name}"] = surface.degenerate_normalization
        meta[f"edges_rotation_{name}"] = surface.edges_rotation.tolist()
        meta[f"edges_translation_{name}"] = surface.edges_translation.tolist()
        if args.heatmap:
            means = surface.cell_means()
            heat_path = f"{args.out}_{name}.pgm"
            sio.write_pgm(heat_path, np.nan_to_num(means, nan=0.0))
            manifest.add_artifact(heat_path)
    meta_path = f"{args.out}_meta.json"
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.add_artifact(meta_path)
    manifest.write(f"{args.out}.manifest.json")
    return EXIT_OK


def cmd_lerp(args):
    mesh = load_obj(args.mesh)
    camera = _camera_from_args(args)
    gt_pose = sio.read_pose(args.gt_pose)
    far_pose = sio.read_pose(args.far_pose)
    losses = [s.strip() for s in args.losses.split(",") if s.strip()]
    rows = interpolation_experiment(mesh, camera, gt_pose, far_pose, steps=args.steps, losses=losses)
    sio.write_rows_csv(args.out, ["lambda"] + losses, rows)
    manifest = _manifest(args, "lerp", {"loss": LossConfig().fingerprint()})
    manifest.add_artifact(args.out)
    manifest.write(args.out + ".manifest.json")
    return EXIT_OK


def cmd_gradcheck(args):
    mesh = load_obj(args.mesh)
    camera = _camera_from_args(args)
    pose = sio.read_pose(args.pose)
    # no target flag: check against the silhouette of a nearby seeded pose,
    # which overlaps the input pose's render without coinciding with it
    target_pose = random_pose_perturbations(
        pose,
        1,
        max_rotation=math.radians(10.0),
        max_translation=0.05 * float(np.linalg.norm(pose.translation)),
        seed=args.seed,
    )[0]
    target = rasterize_hard(transform_vertices(mesh, target_pose), camera)
    cfg = RefineConfig(loss_kind=args.loss, kernel_size=args.kernel_size)
    report = gradcheck(mesh, camera, pose, target, cfg)
    rows = [
        {"parameter": name, "analytic": a, "finite_difference": f, "relative_error": r}
        for name, a, f, r in report.rows()
    ]
    sio.write_rows_csv(args.out, ["parameter", "analytic", "finite_difference", "relative_error"], rows)
    manifest = _manifest(args, "gradcheck", {"loss": cfg.loss_config().fingerprint()})
    manifest.add_artifact(args.out)
    manifest.write(args.out + ".manifest.json")
    print(
        f"gradcheck {report.loss_kind}: {report.fraction_ok:.0%} of parameters within tolerance "
        f"-> {'pass' if report.passed else 'FAIL'}"
    )
    return EXIT_OK if report.passed else EXIT_FAILED_CHECK


def cmd_eval(args):
    pairs = sio.read_pairs(args.pairs)
    mesh = load_obj(args.mesh)
    report = evaluate_pairs(pairs, mesh, stride=args.stride)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_csv())
    manifest = _manifest(args, "eval", {"n_pairs": str(report.n)})
    manifest.add_artifact(args.out)
    manifest.write(args.out + ".manifest.json")
    print(report.to_csv(), end="")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="silfit", description="silhouette-based 6DOF pose tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a silhouette of a posed mesh")
    p.add_argument("--mesh", required=True, help="OBJ mesh (v/f subset)")
    p.add_argument("--pose", required=True, help="pose JSON")
    _add_camera_flags(p)
    p.add_argument("--soft", action="store_true", help="soft (differentiable) rendering instead of hard")
    p.add_argument("--sigma", type=float, default=1.5, help="soft band sigma in pixels")
    p.add_argument("--truncation", type=float, default=12.0, help="soft band truncation radius in pixels")
    p.add_argument("--out", required=True, help="output PGM path")
    _add_common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("refine", help="refine a pose against a target silhouette")
    p.add_argument("--mesh", required=True)
    _add_camera_flags(p)
    p.add_argument("--target", required=True, help="target silhouette PGM (binarized at 128)")
    p.add_argument("--init-pose", required=True, help="initial pose JSON")
    p.add_argument("--prior-pose", help="optional prior pose for the mixed objective")
    p.add_argument("--loss", choices=LOSS_KINDS, default="smooth")
    p.add_argument("--kernel-size", type=int, help="smoothing kernel size (default 49 box / 69 gaussian)")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--convergence-tol", type=float, default=1e-12)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--lambda-exo", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.5)
    p.add_argument("--truncation", type=float, default=12.0)
    p.add_argument("--out-trace", required=True, help="per-step CSV trace")
    p.add_argument("--out-pose", required=True, help="final pose JSON")
    _add_common(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("landscape", help="binned loss surfaces around a pose")
    p.add_argument("--mesh", required=True)
    _add_camera_flags(p)
    p.add_argument("--pose", required=True, help="ground-truth pose JSON")
    p.add_argument("--grid-config", help="JSON overriding default_grid arguments")
    p.add_argument("--losses", default="iou,smooth", help=f"comma list from {','.join(LANDSCAPE_LOSSES)}")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--heatmap", action="store_true", help="also dump per-loss PGM heat maps")
    p.add_argument("--out", required=True, help="output path prefix")
    _add_common(p)
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("lerp", help="losses along the geodesic between two poses")
    p.add_argument("--mesh", required=True)
    _add_camera_flags(p)
    p.add_argument("--gt-pose", required=True)
    p.add_argument("--far-pose", required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--losses", default="iou,smooth")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_lerp)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference pose gradients")
    p.add_argument("--mesh", required=True)
    _add_camera_flags(p)
    p.add_argument("--pose", required=True)
    p.add_argument("--loss", choices=LOSS_KINDS, default="smooth")
    p.add_argument("--kernel-size", type=int)
    p.add_argument("--out", required=True, help="report CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("eval", help="pose metrics over a JSONL pair file")
    p.add_argument("--pairs", required=True, help="JSON-lines file of {id, gt, pred}")
    p.add_argument("--mesh", required=True)
    p.add_argument("--stride", type=int, default=1, help="vertex stride for the model-space error")
    p.add_argument("--out", required=True, help="metrics CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NothingVisible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOTHING_VISIBLE
    except VanishedGradient as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VANISHED
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
