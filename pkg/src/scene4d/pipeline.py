"""End-to-end scene pipelines: synthesize datasets, fuse views, render
trajectories, run the reprojection baseline, and evaluate predictions.

The fused per-frame point cloud is the scene's pseudo-4D representation:
the input video is its render at the source pose, ground-truth target
videos are its renders along the trajectory, and occlusion masks compare
target pixels against the source render's depth. Frames are independent,
so fusing/rendering parallelizes over a worker pool.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import categories, dataset, synth
from .camera import (
    Intrinsics,
    motion_bucket,
    pose_delta,
    pose_to_extrinsics,
    relative_transform,
)
from .dataset import SceneManifest
from .fusion import FusedPointCloud, ViewFrame, fuse_frame, write_point_records
from .metrics import (
    MetricsReport,
    aggregate_reports,
    evaluate_sequence,
    psnr,
    rotation_sweep,
    write_sweep_csv,
)
from .occlusion import compute_occlusion_mask
from .splat import RenderedFrame, RenderSettings, render_points, reproject_baseline
from .trajectory import (
    DEFAULT_FRAME_COUNT,
    CameraTrajectory,
    TrajectorySpec,
    bounds_preset,
    sample_pose_pair,
)

EVAL_START_ELEVATION_DEG = 5.0
SWEEP_ELEVATION_DEG = 10.0
SWEEP_RADIUS_M = 15.0


@dataclass(frozen=True)
class RunConfig:
    """Pipeline configuration; JSON-overridable via the CLI."""

    seed: int = 0
    preset: str = "max90"
    mode: str = "gradual"
    frame_count: int = DEFAULT_FRAME_COUNT
    width: int = 384
    height: int = 256
    n_cameras: int = 16
    fps: float = 24.0
    sphere_range: tuple[int, int] = (7, 22)
    far_plane: float = 500.0
    splat_radius: int = 1
    trajectories_per_scene: int = 4
    samples_per_trajectory: int = 4

    def render_settings(self) -> RenderSettings:
        return RenderSettings(splat_radius=self.splat_radius, far_clip=self.far_plane)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["sphere_range"] = list(self.sphere_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "sphere_range" in d:
            d["sphere_range"] = tuple(d["sphere_range"])
        return cls(**d)


# ---------------------------------------------------------------------------
# Synthesis


def generate_scene(scene_dir, config: RunConfig, scene_seed: int | None = None) -> SceneManifest:
    """Write one synthetic scene (all views, manifest, categories, and the
    fixed evaluation trajectories) under ``scene_dir``."""
    scene_dir = Path(scene_dir)
    scene_dir.mkdir(parents=True, exist_ok=True)
    seed = config.seed if scene_seed is None else scene_seed
    rng = np.random.default_rng(seed)

    spec = synth.make_random_scene(
        rng,
        sphere_range=config.sphere_range,
        frame_count=config.frame_count,
        fps=config.fps,
    )
    rig = synth.make_rig(n=config.n_cameras)
    intrinsics = rig.intrinsics(config.width, config.height)
    extrinsics = rig.extrinsics()

    for t in range(config.frame_count):
        centers = synth.simulate(spec, t)
        for cam_id, cam_extr in enumerate(extrinsics):
            view = synth.render_analytic(
                spec, centers, intrinsics, cam_extr, timestamp=t,
                far_plane=config.far_plane,
            )
            dataset.save_view_frame(scene_dir, cam_id, view)

    manifest = SceneManifest(
        scene_id=scene_dir.name,
        frame_count=config.frame_count,
        base_fps=config.fps,
        cameras=tuple(
            dataset.CameraRecord(
                camera_id=i,
                intrinsics=intrinsics,
                extrinsics=(extr,) * config.frame_count,
            )
            for i, extr in enumerate(extrinsics)
        ),
        modalities=("rgb", "depth", "semantic"),
        far_plane=config.far_plane,
        provenance=dataset.provenance(seed, config.to_dict()),
    )
    manifest.save(scene_dir)
    categories.write_categories_json(scene_dir / "categories.json")
    write_evaluation_trajectories(scene_dir, config, seed)
    return manifest


def write_evaluation_trajectories(scene_dir, config: RunConfig, seed: int) -> None:
    """Sample the scene's fixed evaluation trajectories (source elevation
    pinned at 5 degrees) and store them as trajectories.json."""
    rng = np.random.default_rng((seed, 0xE7A1))
    bounds = bounds_preset(config.preset)
    specs = []
    for _ in range(config.trajectories_per_scene):
        p_src, p_dst = sample_pose_pair(
            rng, bounds, pin_start_elevation_deg=EVAL_START_ELEVATION_DEG
        )
        specs.append(
            TrajectorySpec(
                mode=config.mode,
                frame_count=config.frame_count,
                p_src=p_src,
                p_dst=p_dst,
                preset=config.preset,
                seed=seed,
            )
        )
    dataset.write_json(
        Path(scene_dir) / "trajectories.json",
        {
            "seed": seed,
            "preset": config.preset,
            "trajectories": [s.to_dict() for s in specs],
        },
    )


def load_evaluation_trajectories(scene_dir) -> list[TrajectorySpec]:
    raw = dataset.read_json(Path(scene_dir) / "trajectories.json")
    return [TrajectorySpec.from_dict(d) for d in raw["trajectories"]]


def generate_dataset(root, config: RunConfig, n_scenes: int, jobs: int = 1) -> list[Path]:
    """Generate ``n_scenes`` scenes with per-scene seeds derived from the
    base seed; scenes are independent and distribute over the pool."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    args = [
        (root / f"scene_{i:04d}", config, config.seed + i) for i in range(n_scenes)
    ]
    if jobs > 1 and n_scenes > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_generate_scene_star, args))
    else:
        for a in args:
            _generate_scene_star(a)
    return [a[0] for a in args]


def _generate_scene_star(args) -> None:
    scene_dir, config, seed = args
    generate_scene(scene_dir, config, scene_seed=seed)


# ---------------------------------------------------------------------------
# Fusion


def load_frame_views(scene_dir, manifest: SceneManifest, t: int) -> list[ViewFrame]:
    return [
        dataset.load_view_frame(scene_dir, manifest, i, t)
        for i in range(len(manifest.cameras))
    ]


def fuse_scene_frame(scene_dir, manifest: SceneManifest, t: int) -> FusedPointCloud:
    if "depth" not in manifest.modalities:
        raise ValueError(f"scene {manifest.scene_id} has no depth modality to fuse")
    views = load_frame_views(scene_dir, manifest, t)
    return fuse_frame(views, far_plane=manifest.far_plane)


def fuse_scene(scene_dir, jobs: int = 1) -> list[int]:
    """Fuse every frame of a scene to fused/frame_%04d.bin; returns the
    per-frame point counts."""
    manifest = SceneManifest.load(scene_dir)
    (Path(scene_dir) / "fused").mkdir(exist_ok=True)
    frames = list(range(manifest.frame_count))
    args = [(str(scene_dir), t) for t in frames]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(_fuse_frame_star, args))
    else:
        counts = [_fuse_frame_star(a) for a in args]
    return counts


def _fuse_frame_star(args) -> int:
    scene_dir, t = args
    manifest = SceneManifest.load(scene_dir)
    cloud = fuse_scene_frame(scene_dir, manifest, t)
    write_point_records(dataset.fused_path(scene_dir, t), cloud)
    return len(cloud)


def load_fused_frame(scene_dir, manifest: SceneManifest, t: int) -> FusedPointCloud:
    """Read the stored fused cloud for a frame, fusing on the fly when the
    point records are absent."""
    path = dataset.fused_path(scene_dir, t)
    if path.exists():
        from .fusion import read_point_records

        return read_point_records(path)
    return fuse_scene_frame(scene_dir, manifest, t)


# ---------------------------------------------------------------------------
# Rendering


def render_scene_frame(
    scene_dir,
    manifest: SceneManifest,
    t: int,
    trajectory: CameraTrajectory,
    settings: RenderSettings,
    modality: str = "rgb",
    intrinsics: Intrinsics | None = None,
) -> RenderedFrame:
    cloud = load_fused_frame(scene_dir, manifest, t)
    if intrinsics is None:
        intrinsics = manifest.cameras[0].intrinsics
    return render_points(cloud, intrinsics, trajectory.extrinsics[t], settings, modality)


def render_scene(
    scene_dir,
    spec: TrajectorySpec,
    out_dir,
    settings: RenderSettings | None = None,
    modality: str = "rgb",
    jobs: int = 1,
) -> None:
    """Render the scene's fused clouds along a trajectory and write frames,
    the per-frame relative transforms, and the motion bucket value."""
    manifest = SceneManifest.load(scene_dir)
    trajectory = spec.build()
    if len(trajectory) != spec.frame_count:
        raise ValueError("trajectory length mismatch")
    if spec.frame_count > manifest.frame_count:
        raise ValueError(
            f"trajectory needs {spec.frame_count} frames, scene has {manifest.frame_count}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    frames = list(range(spec.frame_count))
    args = [
        (str(scene_dir), t, spec.to_dict(), settings, modality, str(out_dir))
        for t in frames
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_render_frame_star, args))
    else:
        for a in args:
            _render_frame_star(a)

    write_camera_motion(out_dir, spec)
    dataset.write_json(
        out_dir / "run.json",
        {
            "trajectory": spec.to_dict(),
            "modality": modality,
            "provenance": dataset.provenance(spec.seed or 0, spec.to_dict()),
        },
    )


def _render_frame_star(args) -> None:
    scene_dir, t, spec_dict, settings, modality, out_dir = args
    manifest = SceneManifest.load(scene_dir)
    spec = TrajectorySpec.from_dict(spec_dict)
    frame = render_scene_frame(
        scene_dir,
        manifest,
        t,
        spec.build(),
        settings or RenderSettings(),
        modality,
    )
    dataset.save_rendered_frame(out_dir, t, frame)


def write_camera_motion(out_dir, spec: TrajectorySpec) -> None:
    """Per-frame relative transforms of the trajectory against its source
    pose, plus the endpoint delta parameterization and motion bucket."""
    bounds = bounds_preset(spec.preset or "max90")
    d_azimuth, d_elevation, d_radius = pose_delta(spec.p_src, spec.p_dst)
    trajectory = spec.build()
    per_frame = []
    for t, pose in enumerate(trajectory.poses):
        rel = relative_transform(spec.p_src, pose)
        per_frame.append(
            {
                "frame": t,
                "relative_matrix": rel.matrix.ravel().tolist(),
                "params": list(rel.params),
            }
        )
    dataset.write_json(
        Path(out_dir) / "camera_motion.json",
        {
            "params": {
                "delta_azimuth_deg": d_azimuth,
                "delta_elevation_deg": d_elevation,
                "delta_radius_m": d_radius,
            },
            "motion_bucket": motion_bucket(d_azimuth, d_elevation, bounds),
            "preset": bounds.name,
            "per_frame": per_frame,
        },
    )


# ---------------------------------------------------------------------------
# Evaluation


def render_source_video(
    scene_dir,
    manifest: SceneManifest,
    spec: TrajectorySpec,
    settings: RenderSettings,
    modality: str = "rgb",
) -> list[ViewFrame]:
    """The input video: the fused cloud rendered at the static source pose.

    Its depth channel is the pseudo-4D scene's ground-truth depth at the
    input viewpoint, which is exactly what the occlusion protocol and the
    reprojection baseline are allowed to use.
    """
    intrinsics = manifest.cameras[0].intrinsics
    src_extr = pose_to_extrinsics(spec.p_src)
    views = []
    for t in range(spec.frame_count):
        cloud = load_fused_frame(scene_dir, manifest, t)
        rgb_frame = render_points(cloud, intrinsics, src_extr, settings, "rgb")
        semantic = None
        if modality == "semantic" or "semantic" in manifest.modalities:
            semantic = render_points(cloud, intrinsics, src_extr, settings, "semantic").image
        views.append(
            ViewFrame(
                rgb=rgb_frame.image,
                depth=rgb_frame.depth,
                intrinsics=intrinsics,
                extrinsics=src_extr,
                timestamp=t,
                semantic=semantic,
            )
        )
    return views


def render_target_ground_truth(
    scene_dir,
    manifest: SceneManifest,
    spec: TrajectorySpec,
    settings: RenderSettings,
    modality: str,
) -> list[RenderedFrame]:
    trajectory = spec.build()
    return [
        render_scene_frame(scene_dir, manifest, t, trajectory, settings, modality)
        for t in range(spec.frame_count)
    ]


def evaluate_prediction(
    scene_dir,
    pred_images,
    spec: TrajectorySpec,
    settings: RenderSettings | None = None,
    modality: str = "rgb",
    metadata: dict | None = None,
) -> MetricsReport:
    """Score predicted target frames against the scene's pseudo-4D ground
    truth under the occlusion-aware protocol."""
    settings = settings or RenderSettings()
    manifest = SceneManifest.load(scene_dir)
    gt_frames = render_target_ground_truth(scene_dir, manifest, spec, settings, modality)
    source_views = render_source_video(scene_dir, manifest, spec, settings, modality)
    intrinsics = manifest.cameras[0].intrinsics
    src_extr = pose_to_extrinsics(spec.p_src)
    trajectory = spec.build()

    masks = []
    for t, gt in enumerate(gt_frames):
        target_view = ViewFrame(
            rgb=gt.image if not gt.is_semantic else np.zeros(gt.image.shape + (3,), np.float32),
            depth=gt.depth,
            intrinsics=intrinsics,
            extrinsics=trajectory.extrinsics[t],
            timestamp=t,
        )
        masks.append(
            compute_occlusion_mask(
                target_view, intrinsics, src_extr, source_views[t].depth
            )
        )

    gt_images = [g.image for g in gt_frames]
    if len(pred_images) != len(gt_images):
        raise ValueError(
            f"{len(pred_images)} predicted frames but trajectory has {len(gt_images)}"
        )
    for pred, gt in zip(pred_images, gt_images):
        if pred.shape[:2] != gt.shape[:2]:
            raise ValueError(
                f"resolution mismatch: predicted {pred.shape[:2]}, expected {gt.shape[:2]}"
            )
    meta = {"scene_id": manifest.scene_id, "trajectory": spec.to_dict()}
    meta.update(metadata or {})
    return evaluate_sequence(pred_images, gt_images, masks, modality, metadata=meta)


def run_baseline(
    scene_dir,
    spec: TrajectorySpec,
    out_dir=None,
    settings: RenderSettings | None = None,
    modality: str = "rgb",
) -> tuple[list[RenderedFrame], MetricsReport]:
    """Reproject-RGB-D (or Sem-D) baseline along a trajectory, then score it."""
    settings = settings or RenderSettings()
    manifest = SceneManifest.load(scene_dir)
    if "depth" not in manifest.modalities:
        raise ValueError("baseline requires ground-truth depth")
    source_views = render_source_video(scene_dir, manifest, spec, settings, modality)
    frames = reproject_baseline(source_views, spec.build(), settings, modality)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for t, frame in enumerate(frames):
            dataset.save_rendered_frame(out_dir, t, frame)
        write_camera_motion(out_dir, spec)
    coverage = float(np.mean([f.coverage.mean() for f in frames]))
    report = evaluate_prediction(
        scene_dir,
        [f.image for f in frames],
        spec,
        settings,
        modality,
        metadata={"baseline": "reproject", "mean_coverage": coverage},
    )
    if out_dir is not None:
        report.to_json(Path(out_dir) / "report.json")
    return frames, report


# ---------------------------------------------------------------------------
# Rotation sweep


def sweep_trajectory(angle_deg: float, frame_count: int) -> TrajectorySpec:
    """Gradual trajectory rotating azimuth by ``angle_deg`` at the fixed
    sweep elevation (10 degrees) and radius (15 m)."""
    from .camera import PoseDescription

    p_src = PoseDescription(0.0, SWEEP_ELEVATION_DEG, SWEEP_RADIUS_M)
    p_dst = PoseDescription(angle_deg, SWEEP_ELEVATION_DEG, SWEEP_RADIUS_M)
    return TrajectorySpec(
        mode="gradual", frame_count=frame_count, p_src=p_src, p_dst=p_dst, preset="max180"
    )


def baseline_last_frame_psnr(
    scene_dir, angle_deg: float, settings: RenderSettings | None = None
) -> float:
    """Final-frame PSNR of the reprojection baseline at one sweep angle."""
    settings = settings or RenderSettings()
    manifest = SceneManifest.load(scene_dir)
    spec = sweep_trajectory(angle_deg, manifest.frame_count)
    source_views = render_source_video(scene_dir, manifest, spec, settings, "rgb")
    frames = reproject_baseline(source_views, spec.build(), settings, "rgb")
    gt = render_target_ground_truth(scene_dir, manifest, spec, settings, "rgb")
    t = manifest.frame_count - 1
    return psnr(frames[t].image, gt[t].image)


def run_rotation_sweep(
    scene_dirs,
    angles_deg,
    out_csv,
    settings: RenderSettings | None = None,
) -> list[tuple[float, float]]:
    rows = rotation_sweep(
        list(scene_dirs),
        angles_deg,
        lambda scene, angle: baseline_last_frame_psnr(scene, angle, settings),
    )
    write_sweep_csv(out_csv, rows)
    return rows


__all__ = [
    "RunConfig",
    "aggregate_reports",
    "baseline_last_frame_psnr",
    "evaluate_prediction",
    "fuse_scene",
    "fuse_scene_frame",
    "generate_dataset",
    "generate_scene",
    "load_evaluation_trajectories",
    "load_fused_frame",
    "render_scene",
    "render_source_video",
    "render_target_ground_truth",
    "run_baseline",
    "run_rotation_sweep",
    "sweep_trajectory",
    "write_camera_motion",
]
