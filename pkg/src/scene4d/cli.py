"""Command-line interface: synth | fuse | render | eval | baseline.

Exit codes: 0 success, 2 validation/config error, 3 I/O error. Every
command is deterministic under a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset, pipeline
from .pipeline import RunConfig
from .splat import RenderSettings
from .trajectory import TrajectorySpec

DEFAULT_SWEEP_ANGLES = "0,20,40,60,80,100,120,140,160,180"


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except Exception:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")


def _parse_angles(text: str) -> list[float]:
    try:
        return [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated angles, got {text!r}")


def _load_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        base = dataset.read_json(args.config)
    config = RunConfig.from_dict(base) if base else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "preset", None):
        overrides["preset"] = args.preset
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode
    if getattr(args, "resolution", None):
        overrides["width"], overrides["height"] = args.resolution
    if getattr(args, "frames", None):
        overrides["frame_count"] = args.frames
    if getattr(args, "cameras", None):
        overrides["n_cameras"] = args.cameras
    if getattr(args, "splat_radius", None) is not None:
        overrides["splat_radius"] = args.splat_radius
    if getattr(args, "far_plane", None) is not None:
        overrides["far_plane"] = args.far_plane
    if overrides:
        config = RunConfig.from_dict({**config.to_dict(), **overrides})
    return config


def _render_settings(args, config: RunConfig) -> RenderSettings:
    return RenderSettings(
        splat_radius=config.splat_radius,
        far_clip=config.far_plane,
    )


def _trajectory_spec(args, scene_dir) -> TrajectorySpec:
    if getattr(args, "trajectory", None):
        raw = dataset.read_json(args.trajectory)
        if "trajectories" in raw:
            return TrajectorySpec.from_dict(raw["trajectories"][args.index])
        return TrajectorySpec.from_dict(raw)
    specs = pipeline.load_evaluation_trajectories(scene_dir)
    return specs[args.index]


def cmd_synth(args) -> int:
    config = _load_config(args)
    paths = pipeline.generate_dataset(args.out, config, args.scenes, jobs=args.jobs)
    for p in paths:
        print(f"wrote scene {p}")
    return 0


def cmd_fuse(args) -> int:
    counts = pipeline.fuse_scene(args.scene, jobs=args.jobs)
    for t, n in enumerate(counts):
        print(f"frame {t:04d}: {n} points")
    print(f"fused {len(counts)} frames, {sum(counts)} points total")
    return 0


def cmd_render(args) -> int:
    config = _load_config(args)
    spec = _trajectory_spec(args, args.scene)
    pipeline.render_scene(
        args.scene,
        spec,
        args.out,
        settings=_render_settings(args, config),
        modality=args.modality,
        jobs=args.jobs,
    )
    print(f"rendered {spec.frame_count} frames to {args.out}")
    return 0


def _eval_single(scene, pred_dir, spec, settings, modality) -> dict:
    frame_count = spec.frame_count
    pred = dataset.load_rendered_images(pred_dir, frame_count, modality)
    report = pipeline.evaluate_prediction(scene, pred, spec, settings, modality)
    return report.to_dict()


def cmd_eval(args) -> int:
    config = _load_config(args)
    settings = _render_settings(args, config)
    if args.sweep:
        angles = args.angles
        rows = pipeline.run_rotation_sweep([args.scene], angles, args.sweep, settings)
        for angle, value in rows:
            print(f"angle {angle:6.1f} deg: PSNR {value:.2f} dB")
        print(f"wrote sweep CSV to {args.sweep}")
        return 0

    if not args.pred:
        raise ValueError("--pred is required unless --sweep is given")
    pred_dir = Path(args.pred)
    direct = (pred_dir / "rgb").exists() or (pred_dir / "semantic").exists()
    if direct:
        spec = _trajectory_spec(args, args.scene)
        payload = _eval_single(args.scene, pred_dir, spec, settings, args.modality)
    else:
        # Directory of runs: each subdirectory carries its trajectory in
        # run.json; results are averaged across runs.
        runs = sorted(
            d for d in pred_dir.iterdir()
            if d.is_dir() and ((d / "rgb").exists() or (d / "semantic").exists())
        )
        if not runs:
            raise ValueError(f"no prediction frames found under {pred_dir}")
        reports = []
        for run in runs:
            run_meta = dataset.read_json(run / "run.json")
            spec = TrajectorySpec.from_dict(run_meta["trajectory"])
            pred = dataset.load_rendered_images(run, spec.frame_count, args.modality)
            reports.append(
                pipeline.evaluate_prediction(args.scene, pred, spec, settings, args.modality)
            )
        payload = {
            "runs": [r.to_dict() for r in reports],
            "combined": pipeline.aggregate_reports(reports),
        }
    out = args.out or "report.json"
    dataset.write_json(out, payload)
    print(json.dumps(payload.get("aggregate", payload.get("combined")), indent=2))
    print(f"wrote report to {out}")
    return 0


def cmd_baseline(args) -> int:
    config = _load_config(args)
    settings = _render_settings(args, config)
    spec = _trajectory_spec(args, args.scene)
    _, report = pipeline.run_baseline(
        args.scene, spec, out_dir=args.out, settings=settings, modality=args.modality
    )
    print(json.dumps(report.aggregate, indent=2))
    coverage = report.metadata.get("mean_coverage")
    if coverage is not None:
        print(f"mean coverage: {coverage:.4f}")
    print(f"wrote baseline frames and report to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scene4d",
        description="Synthesize, fuse, render, and evaluate pseudo-4D scenes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file (flags override)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--preset", choices=["max90", "max180"], default=None)
        p.add_argument("--mode", choices=["gradual", "direct", "sine"], default=None)
        p.add_argument("--resolution", type=_parse_resolution, default=None, metavar="WxH")
        p.add_argument("--splat-radius", dest="splat_radius", type=int, default=None)
        p.add_argument("--far-plane", dest="far_plane", type=float, default=None)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("synth", help="generate synthetic scenes on disk")
    add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--scenes", type=int, default=1)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--cameras", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fuse", help="fuse all views into per-frame point clouds")
    add_common(p)
    p.add_argument("scene")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("render", help="render a trajectory from the fused scene")
    add_common(p)
    p.add_argument("scene")
    p.add_argument("--trajectory", help="trajectory JSON (default: scene trajectories.json)")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--modality", choices=["rgb", "semantic"], default="rgb")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="evaluate predictions (or run the rotation sweep)")
    add_common(p)
    p.add_argument("scene")
    p.add_argument("--pred", help="predicted frames directory (single run or run set)")
    p.add_argument("--trajectory")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--modality", choices=["rgb", "semantic"], default="rgb")
    p.add_argument("--out", help="output report path (default report.json)")
    p.add_argument("--sweep", help="write the rotation-sweep CSV here instead")
    p.add_argument("--angles", type=_parse_angles, default=_parse_angles(DEFAULT_SWEEP_ANGLES))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="run the reprojection baseline and score it")
    add_common(p)
    p.add_argument("scene")
    p.add_argument("--trajectory")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--modality", choices=["rgb", "semantic"], default="rgb")
    p.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
