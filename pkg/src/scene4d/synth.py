"""Analytic synthetic scene generator: ballistic spheres over a checkered
ground plane, ray-traced exactly from a multi-camera rig.

Every depth is the exact ray/primitive intersection in double precision, so
these renders serve as the ground-truth oracle for the fusion, rendering,
and occlusion code paths. Physics is deliberately minimal: closed-form
ballistics with ground bounces, no inter-sphere collisions, flat shading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import categories
from .camera import Extrinsics, Intrinsics, PoseDescription, pose_to_extrinsics
from .fusion import DepthFrame, ViewFrame

GRAVITY = 9.81
RESTITUTION = 0.6
DEFAULT_HFOV_DEG = 53.1
DEFAULT_FAR_PLANE = 500.0

SPAWN_XY = 7.0
SPAWN_Z_MAX = 7.0
RADIUS_RANGE = (0.5, 1.5)

# Moderate albedo contrast: enough texture for image metrics to register,
# low enough that sub-pixel silhouette aliasing between views does not
# dominate round-trip scores (geometry is checked by depth oracles).
CHECKER_CELL_M = 2.0
CHECKER_LIGHT = (0.62, 0.62, 0.62)
CHECKER_DARK = (0.48, 0.48, 0.48)

# Vertical speed below which a bouncing sphere is considered at rest.
_REST_SPEED = math.sqrt(2.0 * GRAVITY * 1e-4)


@dataclass(frozen=True)
class Sphere:
    center0: tuple[float, float, float]
    velocity0: tuple[float, float, float]
    radius: float
    color: tuple[float, float, float]
    label: int

    def __post_init__(self):
        object.__setattr__(self, "center0", tuple(float(c) for c in self.center0))
        object.__setattr__(self, "velocity0", tuple(float(v) for v in self.velocity0))
        object.__setattr__(self, "color", tuple(float(c) for c in self.color))


@dataclass(frozen=True)
class SceneSpec:
    spheres: tuple[Sphere, ...]
    frame_count: int
    fps: float = 24.0
    gravity: float = GRAVITY
    restitution: float = RESTITUTION

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        for s in self.spheres:
            if not RADIUS_RANGE[0] <= s.radius <= RADIUS_RANGE[1]:
                raise ValueError(f"sphere radius {s.radius} outside {RADIUS_RANGE}")
            x, y, z = s.center0
            if abs(x) > SPAWN_XY or abs(y) > SPAWN_XY:
                raise ValueError("sphere spawns outside the ground box")
            if not s.radius <= z <= SPAWN_Z_MAX:
                raise ValueError("sphere must spawn between the ground and z=7")


@dataclass(frozen=True)
class CameraRig:
    """Fixed set of poses, all aimed at the scene center."""

    poses: tuple[PoseDescription, ...]
    horizontal_fov_deg: float = DEFAULT_HFOV_DEG

    def intrinsics(self, width: int, height: int) -> Intrinsics:
        from .camera import intrinsics_from_fov

        return intrinsics_from_fov(width, height, self.horizontal_fov_deg)

    def extrinsics(self) -> tuple[Extrinsics, ...]:
        return tuple(pose_to_extrinsics(p) for p in self.poses)


def make_rig(
    n: int = 16,
    radius: float = 15.0,
    elevations_deg: tuple[float, ...] = (10.0, 40.0),
    look_at: tuple[float, float, float] = (0.0, 0.0, 1.0),
) -> CameraRig:
    """Evenly spaced azimuth rings (staggered between rings) at the given
    elevations, all looking at the scene center."""
    if n < 1:
        raise ValueError("need at least one camera")
    rings = len(elevations_deg)
    per_ring, extra = divmod(n, rings)
    poses = []
    for ring, elevation in enumerate(elevations_deg):
        count = per_ring + (1 if ring < extra else 0)
        spacing = 360.0 / count
        offset = spacing * ring / rings
        for i in range(count):
            poses.append(
                PoseDescription(offset + i * spacing, elevation, radius, look_at)
            )
    return CameraRig(poses=tuple(poses))


def _vertical_state(z0: float, vz0: float, radius: float, tau: float,
                    gravity: float, restitution: float) -> float:
    """Height of a bouncing sphere center after tau seconds (closed form per
    ballistic segment; terminates via the rest-speed threshold)."""
    z, vz, rem = z0, vz0, tau
    while rem > 0:
        if z - radius <= 1e-12 and abs(vz) <= _REST_SPEED:
            return radius
        # Solve z + vz*s - g*s^2/2 = radius for the impact time s > 0.
        disc = vz * vz + 2.0 * gravity * (z - radius)
        if disc < 0:
            disc = 0.0
        s_hit = (vz + math.sqrt(disc)) / gravity
        if s_hit >= rem or s_hit <= 0:
            return z + vz * rem - 0.5 * gravity * rem * rem
        rem -= s_hit
        impact_speed = -(vz - gravity * s_hit)
        vz = restitution * impact_speed
        z = radius
    return z


def simulate(spec: SceneSpec, t: int) -> np.ndarray:
    """Sphere centers at frame t, shape (S, 3). Horizontal motion is
    constant-velocity; vertical motion is ballistic with restitution
    bounces. State is computed directly from t (no stepping)."""
    if not 0 <= t < spec.frame_count:
        raise ValueError(f"frame {t} outside [0, {spec.frame_count})")
    tau = t / spec.fps
    centers = np.empty((len(spec.spheres), 3))
    for i, s in enumerate(spec.spheres):
        x0, y0, z0 = s.center0
        vx, vy, vz = s.velocity0
        centers[i, 0] = x0 + vx * tau
        centers[i, 1] = y0 + vy * tau
        centers[i, 2] = _vertical_state(
            z0, vz, s.radius, tau, spec.gravity, spec.restitution
        )
    return centers


def render_analytic(
    spec: SceneSpec,
    centers: np.ndarray,
    intrinsics: Intrinsics,
    extrinsics: Extrinsics,
    timestamp: int = 0,
    far_plane: float = DEFAULT_FAR_PLANE,
) -> ViewFrame:
    """Exact per-pixel nearest ray/sphere and ray/ground intersection.

    Depth is the camera-frame z of the hit (rays are parameterized so the
    ray parameter *is* the z-depth); misses keep the 0 sentinel.
    """
    width, height = intrinsics.width, intrinsics.height
    cols, rows = np.meshgrid(np.arange(width), np.arange(height))
    # Camera-frame ray directions with unit forward component.
    dirs_cam = np.stack(
        [
            (cols + 0.5 - intrinsics.cx) / intrinsics.fx,
            (rows + 0.5 - intrinsics.cy) / intrinsics.fy,
            np.ones_like(cols, dtype=np.float64),
        ],
        axis=-1,
    ).reshape(-1, 3)
    origin = extrinsics.camera_center
    dirs = dirs_cam @ extrinsics.rotation.T

    n_pix = dirs.shape[0]
    best_t = np.full(n_pix, np.inf)
    # Hit ids: -1 miss, -2 ground, >= 0 sphere index.
    hit_id = np.full(n_pix, -1, dtype=np.int64)

    a = np.einsum("ij,ij->i", dirs, dirs)
    for i, sphere in enumerate(spec.spheres):
        oc = origin - centers[i]
        b = 2.0 * (dirs @ oc)
        c = float(oc @ oc) - sphere.radius * sphere.radius
        disc = b * b - 4.0 * a * c
        hit = disc > 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
        t = np.where(t_near > 1e-9, t_near, t_far)
        valid = hit & (t > 1e-9) & (t < best_t)
        best_t[valid] = t[valid]
        hit_id[valid] = i

    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = -origin[2] / dz
    ground_valid = (dz != 0) & (t_ground > 1e-9) & (t_ground < best_t)
    best_t[ground_valid] = t_ground[ground_valid]
    hit_id[ground_valid] = -2

    beyond = best_t > far_plane
    hit_id[beyond] = -1
    best_t[beyond | (hit_id == -1)] = 0.0

    rgb = np.zeros((n_pix, 3), dtype=np.float32)
    semantic = np.full(n_pix, categories.VOID_ID, dtype=np.uint16)

    ground_mask = hit_id == -2
    if np.any(ground_mask):
        hits = origin + best_t[ground_mask, None] * dirs[ground_mask]
        parity = (
            np.floor(hits[:, 0] / CHECKER_CELL_M) + np.floor(hits[:, 1] / CHECKER_CELL_M)
        ).astype(np.int64) & 1
        ground_rgb = np.where(
            parity[:, None] == 0,
            np.asarray(CHECKER_LIGHT, dtype=np.float32),
            np.asarray(CHECKER_DARK, dtype=np.float32),
        )
        rgb[ground_mask] = ground_rgb
        semantic[ground_mask] = categories.GROUND_ID

    for i, sphere in enumerate(spec.spheres):
        mask = hit_id == i
        if np.any(mask):
            rgb[mask] = np.asarray(sphere.color, dtype=np.float32)
            semantic[mask] = sphere.label

    return ViewFrame(
        rgb=rgb.reshape(height, width, 3),
        depth=DepthFrame(best_t.reshape(height, width).astype(np.float32)),
        intrinsics=intrinsics,
        extrinsics=extrinsics,
        timestamp=timestamp,
        semantic=semantic.reshape(height, width),
    )


def make_random_scene(
    rng: np.random.Generator,
    n_spheres: int | None = None,
    sphere_range: tuple[int, int] = (7, 22),
    frame_count: int = 14,
    fps: float = 24.0,
) -> SceneSpec:
    """Random scene: spheres spawned in the ground box with roughly one
    third starting in mid-air, random sizes, colors, and category labels."""
    if n_spheres is None:
        n_spheres = int(rng.integers(sphere_range[0], sphere_range[1] + 1))
    n_airborne = max(1, round(n_spheres / 3)) if n_spheres else 0
    spheres = []
    for i in range(n_spheres):
        radius = float(rng.uniform(*RADIUS_RANGE))
        x = float(rng.uniform(-SPAWN_XY, SPAWN_XY))
        y = float(rng.uniform(-SPAWN_XY, SPAWN_XY))
        if i < n_airborne:
            z = float(rng.uniform(radius + 1.0, SPAWN_Z_MAX))
        else:
            z = radius
        velocity = (float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)), 0.0)
        color = tuple(float(c) for c in rng.uniform(0.35, 0.78, size=3))
        label = categories.SPHERE_LABEL_CYCLE[i % len(categories.SPHERE_LABEL_CYCLE)]
        spheres.append(Sphere((x, y, z), velocity, radius, color, label))
    return SceneSpec(spheres=tuple(spheres), frame_count=frame_count, fps=fps)
