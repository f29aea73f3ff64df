"""Pinhole camera model and SE(3) pose algebra.

Conventions (fixed once, used everywhere):

World frame (right-handed, Z-up):
  - Z axis points up; the ground plane is z = 0.
  - Azimuth is measured in the XY-plane from +X toward +Y.
  - Elevation is measured from the XY-plane (not from the Z axis).

Camera frame (right-handed, standard computer vision):
  - +X right, +Y down, +Z forward along the optical axis.
  - Depth values are z-depths (distance along +Z), not ray lengths.

Extrinsics are stored camera-to-world, so the matrix's translation column
is the camera center and ``relative_extrinsics(E, E)`` is the identity.
Pixel (i, j) on the integer grid has its center at (i + 0.5, j + 0.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .trajectory import SamplingBounds

ROTATION_TOL = 1e-9

WORLD_UP = np.array([0.0, 0.0, 1.0])
# Right-axis fallback when the gaze is parallel to WORLD_UP (zenith/nadir).
ZENITH_RIGHT_FALLBACK = np.array([1.0, 0.0, 0.0])


def _as_vec3(value, name: str) -> np.ndarray:
    v = np.asarray(value, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def wrap_angle_deg(angle: float) -> float:
    """Wrap an angle in degrees to the interval (-180, 180]."""
    wrapped = angle % 360.0
    return wrapped - 360.0 if wrapped > 180.0 else wrapped


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole projection parameters, constant over time and across views."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Intrinsics":
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
        )


@dataclass(frozen=True, eq=False)
class Extrinsics:
    """4x4 homogeneous camera-to-world rigid transform."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"extrinsics must be 4x4, got {m.shape}")
        if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
            raise ValueError("extrinsics bottom row must be exactly (0, 0, 0, 1)")
        r = m[:3, :3]
        if np.max(np.abs(r.T @ r - np.eye(3))) > ROTATION_TOL:
            raise ValueError("rotation block is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > ROTATION_TOL:
            raise ValueError("rotation block must be proper (det = +1)")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def camera_center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return self.matrix[:3, 3]

    def inverse_matrix(self) -> np.ndarray:
        """World-to-camera matrix via the rigid closed form (R^T, -R^T t)."""
        r = self.rotation
        out = np.eye(4)
        out[:3, :3] = r.T
        out[:3, 3] = -r.T @ self.matrix[:3, 3]
        return out

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Map world-frame points (..., 3) into the camera frame."""
        pts = np.asarray(points, dtype=np.float64)
        r = self.rotation
        t = self.matrix[:3, 3]
        return (pts - t) @ r

    def camera_to_world(self, points: np.ndarray) -> np.ndarray:
        """Map camera-frame points (..., 3) into the world frame."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.matrix[:3, 3]

    @classmethod
    def identity(cls) -> "Extrinsics":
        return cls(np.eye(4))


@dataclass(frozen=True)
class PoseDescription:
    """Spherical camera pose: azimuth/elevation/radius around a look-at point.

    Azimuth may be any real number (reduced mod 360 only for bound checks),
    which keeps convex combinations of two poses valid and monotone.
    """

    azimuth_deg: float
    elevation_deg: float
    radius_m: float
    look_at: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not math.isfinite(self.azimuth_deg):
            raise ValueError("azimuth must be finite")
        if not -90.0 <= self.elevation_deg <= 90.0:
            raise ValueError(f"elevation {self.elevation_deg} outside [-90, 90]")
        if not self.radius_m > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "look_at", tuple(float(c) for c in self.look_at))
        if len(self.look_at) != 3:
            raise ValueError("look_at must have 3 components")

    def camera_center(self) -> np.ndarray:
        phi = math.radians(self.azimuth_deg)
        theta = math.radians(self.elevation_deg)
        direction = np.array(
            [
                math.cos(theta) * math.cos(phi),
                math.cos(theta) * math.sin(phi),
                math.sin(theta),
            ]
        )
        return np.asarray(self.look_at) + self.radius_m * direction

    def to_dict(self) -> dict:
        return {
            "azimuth_deg": self.azimuth_deg,
            "elevation_deg": self.elevation_deg,
            "radius_m": self.radius_m,
            "look_at": list(self.look_at),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PoseDescription":
        return cls(
            azimuth_deg=float(d["azimuth_deg"]),
            elevation_deg=float(d["elevation_deg"]),
            radius_m=float(d["radius_m"]),
            look_at=tuple(d["look_at"]),
        )


@dataclass(frozen=True, eq=False)
class RelativeTransform:
    """Rigid transform expressing the destination pose in the source frame.

    ``params`` holds the (d_azimuth, d_elevation, d_radius) pose-description
    differences when the transform was built from pose descriptions, and is
    None when built from raw extrinsics.
    """

    matrix: np.ndarray
    params: tuple[float, float, float] | None = None

    def __post_init__(self):
        # Reuse the extrinsics rigidity checks.
        checked = Extrinsics(self.matrix)
        object.__setattr__(self, "matrix", checked.matrix)
        if self.params is not None:
            object.__setattr__(self, "params", tuple(float(p) for p in self.params))


def pose_to_extrinsics(pose: PoseDescription) -> Extrinsics:
    """Realize a pose description as a camera-to-world rigid transform.

    The camera sits at ``look_at + r * (cos(el)cos(az), cos(el)sin(az),
    sin(el))`` and looks at ``look_at``. At the zenith/nadir the right axis
    falls back to world +X.
    """
    center = pose.camera_center()
    return look_at_extrinsics(center, np.asarray(pose.look_at))


def look_at_extrinsics(camera_position, gaze_target) -> Extrinsics:
    """Camera-to-world extrinsics for a camera at ``camera_position`` looking
    at ``gaze_target`` with world +Z as the up reference."""
    center = _as_vec3(camera_position, "camera_position")
    target = _as_vec3(gaze_target, "gaze_target")
    gaze = target - center
    norm = np.linalg.norm(gaze)
    if norm == 0.0:
        raise ValueError("degenerate gaze: camera position equals look-at point")
    forward = gaze / norm

    right = np.cross(forward, WORLD_UP)
    right_norm = np.linalg.norm(right)
    if right_norm < 1e-12:
        right = ZENITH_RIGHT_FALLBACK.copy()
    else:
        right = right / right_norm
    up = np.cross(right, forward)
    up /= np.linalg.norm(up)

    matrix = np.eye(4)
    # Columns are the world directions of the camera axes (+X right, +Y down,
    # +Z forward).
    matrix[:3, 0] = right
    matrix[:3, 1] = -up
    matrix[:3, 2] = forward
    matrix[:3, 3] = center
    return Extrinsics(matrix)


def pose_from_camera_position(camera_position, look_at) -> PoseDescription:
    """Recover the spherical pose description of a camera at a Euclidean
    position with a known look-at point (exact inverse of ``camera_center``)."""
    center = _as_vec3(camera_position, "camera_position")
    target = _as_vec3(look_at, "look_at")
    offset = center - target
    radius = float(np.linalg.norm(offset))
    if radius == 0.0:
        raise ValueError("degenerate gaze: camera position equals look-at point")
    elevation = math.degrees(math.asin(np.clip(offset[2] / radius, -1.0, 1.0)))
    azimuth = math.degrees(math.atan2(offset[1], offset[0]))
    return PoseDescription(azimuth, elevation, radius, tuple(target))


def relative_extrinsics(e_src: Extrinsics, e_dst: Extrinsics) -> RelativeTransform:
    """Relative transform ``e_src^-1 @ e_dst`` between two camera poses."""
    return RelativeTransform(e_src.inverse_matrix() @ e_dst.matrix)


def pose_delta(p_src: PoseDescription, p_dst: PoseDescription) -> tuple[float, float, float]:
    """Componentwise pose-description difference (destination minus source)."""
    return (
        p_dst.azimuth_deg - p_src.azimuth_deg,
        p_dst.elevation_deg - p_src.elevation_deg,
        p_dst.radius_m - p_src.radius_m,
    )


def relative_transform(p_src: PoseDescription, p_dst: PoseDescription) -> RelativeTransform:
    """Relative transform between two pose descriptions, with the
    (d_azimuth, d_elevation, d_radius) parameterization attached."""
    matrix = relative_extrinsics(pose_to_extrinsics(p_src), pose_to_extrinsics(p_dst)).matrix
    return RelativeTransform(matrix, params=pose_delta(p_src, p_dst))


def interpolate_pose(
    p1: PoseDescription, p2: PoseDescription, alpha: float
) -> PoseDescription:
    """Convex combination of two pose descriptions.

    Elevation, radius, and look-at interpolate linearly; azimuth follows the
    signed shortest arc (difference wrapped to (-180, 180]). The endpoints
    are returned exactly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0.0 or p1 == p2:
        return p1
    if alpha == 1.0:
        return p2
    azimuth = p1.azimuth_deg + alpha * wrap_angle_deg(p2.azimuth_deg - p1.azimuth_deg)
    look_at = tuple(
        (1.0 - alpha) * a + alpha * b for a, b in zip(p1.look_at, p2.look_at)
    )
    return PoseDescription(
        azimuth_deg=azimuth,
        elevation_deg=(1.0 - alpha) * p1.elevation_deg + alpha * p2.elevation_deg,
        radius_m=(1.0 - alpha) * p1.radius_m + alpha * p2.radius_m,
        look_at=look_at,
    )


def project(k: Intrinsics, point_cam: np.ndarray, near_clip: float = 0.0):
    """Project camera-frame points (..., 3) to pixel coordinates.

    Returns ``(u, v, z)`` where z is the forward-axis depth. Raises for
    points at or behind the near clip plane.
    """
    pts = np.asarray(point_cam, dtype=np.float64)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    if np.any(z <= near_clip):
        raise ValueError("point at or behind the near clip plane")
    u = k.fx * x / z + k.cx
    v = k.fy * y / z + k.cy
    return u, v, z


def unproject_pixel(k: Intrinsics, u, v, depth) -> np.ndarray:
    """Lift pixel coordinates with z-depth into the camera frame (..., 3).

    Exact inverse of :func:`project`. Pass ``i + 0.5`` for integer grid
    coordinates to unproject pixel centers.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = np.asarray(depth, dtype=np.float64)
    if np.any(d <= 0):
        raise ValueError("depth must be positive")
    return np.stack(
        [(u - k.cx) / k.fx * d, (v - k.cy) / k.fy * d, np.broadcast_to(d, u.shape)],
        axis=-1,
    )


def intrinsics_from_fov(width: int, height: int, horizontal_fov_deg: float) -> Intrinsics:
    """Square-pixel intrinsics from a horizontal field of view."""
    if not 0.0 < horizontal_fov_deg < 180.0:
        raise ValueError(f"fov {horizontal_fov_deg} outside (0, 180)")
    focal = (width / 2.0) / math.tan(math.radians(horizontal_fov_deg) / 2.0)
    return Intrinsics(
        width=width, height=height, fx=focal, fy=focal, cx=width / 2.0, cy=height / 2.0
    )


def motion_bucket(
    delta_phi_deg: float, delta_theta_deg: float, bounds: "SamplingBounds"
) -> int:
    """Integer in [0, 255] proportional to the commanded rotation magnitude.

    Zero rotation maps to 0 and the preset's maximum (d_azimuth, d_elevation)
    norm maps to 255; values are clamped.
    """
    # Ratio of squared norms before the sqrt keeps exact halves exact
    # (e.g. half the cap norm rounds to 128, not 127).
    mag_sq = delta_phi_deg**2 + delta_theta_deg**2
    cap_sq = bounds.max_delta_azimuth_deg**2 + bounds.max_delta_elevation_deg**2
    bucket = int(math.floor(255.0 * math.sqrt(mag_sq / cap_sq) + 0.5))
    return min(max(bucket, 0), 255)
