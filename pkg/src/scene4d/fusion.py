"""Unprojection of calibrated RGB-D views into merged world-space point clouds.

Each valid depth pixel becomes exactly one point; fusing a frame simply
concatenates the per-view clouds (no deduplication — the renderer's z-buffer
resolves redundancy). Invalid depth uses the sentinel 0, and pixels beyond
the far plane are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import Extrinsics, Intrinsics, unproject_pixel

DEFAULT_FAR_PLANE = 500.0

# On-disk point record: little-endian, 18 bytes per point.
POINT_RECORD_DTYPE = np.dtype(
    [("position", "<f4", 3), ("rgb", "u1", 3), ("label", "<u2"), ("view", "u1")]
)


@dataclass(frozen=True, eq=False)
class DepthFrame:
    """H x W z-depth map in meters; 0 marks invalid pixels."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 2:
            raise ValueError(f"depth must be 2-D, got shape {v.shape}")
        finite = np.isfinite(v)
        if not np.all(finite):
            raise ValueError("depth contains non-finite values")
        if np.any(v < 0):
            raise ValueError("depth values must be >= 0 (0 = invalid)")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def valid_mask(self) -> np.ndarray:
        return self.values > 0


@dataclass(frozen=True, eq=False)
class ViewFrame:
    """One camera's calibrated observation at a single timestamp."""

    rgb: np.ndarray
    depth: DepthFrame
    intrinsics: Intrinsics
    extrinsics: Extrinsics
    timestamp: int
    semantic: np.ndarray | None = None

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.float32)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"rgb must be HxWx3, got shape {rgb.shape}")
        shape = rgb.shape[:2]
        if self.depth.values.shape != shape:
            raise ValueError("rgb and depth dimensions differ")
        if shape != (self.intrinsics.height, self.intrinsics.width):
            raise ValueError("image dimensions do not match intrinsics")
        object.__setattr__(self, "rgb", rgb)
        if self.semantic is not None:
            semantic = np.asarray(self.semantic)
            if semantic.shape != shape:
                raise ValueError("semantic map dimensions differ from rgb")
            object.__setattr__(self, "semantic", semantic.astype(np.uint16))


@dataclass(frozen=True, eq=False)
class FusedPointCloud:
    """World-space points with per-point color/label/view attributes."""

    positions: np.ndarray  # (N, 3) float32, meters
    colors: np.ndarray  # (N, 3) float32 in [0, 1]
    source_view: np.ndarray  # (N,) uint8
    timestamp: int
    labels: np.ndarray | None = None  # (N,) uint16

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=np.float32)
        colors = np.asarray(self.colors, dtype=np.float32)
        views = np.asarray(self.source_view, dtype=np.uint8)
        n = positions.shape[0]
        if positions.shape != (n, 3) or colors.shape != (n, 3) or views.shape != (n,):
            raise ValueError("point attribute arrays must share length N")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "colors", colors)
        object.__setattr__(self, "source_view", views)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.uint16)
            if labels.shape != (n,):
                raise ValueError("labels must have length N")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def empty(cls, timestamp: int = 0, with_labels: bool = False) -> "FusedPointCloud":
        return cls(
            positions=np.empty((0, 3), dtype=np.float32),
            colors=np.empty((0, 3), dtype=np.float32),
            source_view=np.empty(0, dtype=np.uint8),
            timestamp=timestamp,
            labels=np.empty(0, dtype=np.uint16) if with_labels else None,
        )


def unproject_view(
    view: ViewFrame, view_id: int = 0, far_plane: float = DEFAULT_FAR_PLANE
) -> FusedPointCloud:
    """Lift every valid depth pixel of a view into a world-space point.

    Pixels with sentinel depth or depth beyond ``far_plane`` are skipped.
    Positions use pixel centers, so reprojecting a point into its source
    camera recovers its pixel exactly.
    """
    depth = view.depth.values
    valid = (depth > 0) & (depth <= far_plane)
    rows, cols = np.nonzero(valid)
    if rows.size == 0:
        return FusedPointCloud.empty(view.timestamp, with_labels=view.semantic is not None)
    points_cam = unproject_pixel(
        view.intrinsics, cols + 0.5, rows + 0.5, depth[rows, cols].astype(np.float64)
    )
    positions = view.extrinsics.camera_to_world(points_cam).astype(np.float32)
    return FusedPointCloud(
        positions=positions,
        colors=view.rgb[rows, cols],
        source_view=np.full(rows.size, view_id, dtype=np.uint8),
        timestamp=view.timestamp,
        labels=view.semantic[rows, cols] if view.semantic is not None else None,
    )


def fuse_frame(
    views: list[ViewFrame], far_plane: float = DEFAULT_FAR_PLANE
) -> FusedPointCloud:
    """Merge same-timestamp views into one point cloud by concatenation."""
    if not views:
        raise ValueError("need at least one view")
    timestamp = views[0].timestamp
    if any(v.timestamp != timestamp for v in views):
        raise ValueError("all fused views must share the same timestamp")
    clouds = [unproject_view(v, view_id=i, far_plane=far_plane) for i, v in enumerate(views)]
    with_labels = all(c.labels is not None for c in clouds)
    return FusedPointCloud(
        positions=np.concatenate([c.positions for c in clouds]),
        colors=np.concatenate([c.colors for c in clouds]),
        source_view=np.concatenate([c.source_view for c in clouds]),
        timestamp=timestamp,
        labels=np.concatenate([c.labels for c in clouds]) if with_labels else None,
    )


def write_point_records(path, cloud: FusedPointCloud) -> None:
    """Write a cloud as a packed little-endian record stream plus a JSON
    sidecar (same path with .json appended) holding count and timestamp."""
    records = np.zeros(len(cloud), dtype=POINT_RECORD_DTYPE)
    records["position"] = cloud.positions
    records["rgb"] = np.round(np.clip(cloud.colors, 0.0, 1.0) * 255.0).astype(np.uint8)
    if cloud.labels is not None:
        records["label"] = cloud.labels
    records["view"] = cloud.source_view
    path = Path(path)
    path.write_bytes(records.tobytes())
    sidecar = {
        "count": len(cloud),
        "timestamp": cloud.timestamp,
        "has_labels": cloud.labels is not None,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def read_point_records(path) -> FusedPointCloud:
    """Read a point record stream written by :func:`write_point_records`."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    records = np.frombuffer(path.read_bytes(), dtype=POINT_RECORD_DTYPE)
    if records.size != sidecar["count"]:
        raise ValueError(
            f"point record count {records.size} does not match sidecar {sidecar['count']}"
        )
    return FusedPointCloud(
        positions=records["position"].astype(np.float32),
        colors=records["rgb"].astype(np.float32) / 255.0,
        source_view=records["view"].copy(),
        timestamp=int(sidecar["timestamp"]),
        labels=records["label"].copy() if sidecar.get("has_labels") else None,
    )
