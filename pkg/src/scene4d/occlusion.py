"""Per-pixel visibility classification of a target view against a source
camera's ground-truth depth.

A target pixel (with valid ground-truth depth) is unprojected to its world
point and checked against the source depth map: points that land outside
the source frustum are out-of-view, points significantly behind the source
surface are occluded, everything else is visible. Out-of-view pixels count
toward the "occluded" evaluation split, since the model has to inpaint them
either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .camera import Extrinsics, Intrinsics, unproject_pixel
from .fusion import DepthFrame, ViewFrame

# Depth-comparison slack absorbing splat/sampling quantization.
DEFAULT_REL_TOL = 1e-3
DEFAULT_ABS_TOL = 0.05


class Visibility(IntEnum):
    VISIBLE = 0
    OCCLUDED = 1
    OUT_OF_VIEW = 2
    NO_DATA = 3


@dataclass(frozen=True, eq=False)
class OcclusionMask:
    """H x W map of :class:`Visibility` labels."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.ndim != 2:
            raise ValueError("mask must be 2-D")
        if labels.max(initial=0) > Visibility.NO_DATA:
            raise ValueError("mask values must be in 0..3")
        labels = labels.copy()
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    def valid(self) -> np.ndarray:
        """Pixels with valid ground-truth target depth."""
        return self.labels != Visibility.NO_DATA

    def occluded_split(self) -> np.ndarray:
        """Pixels of the "occ." evaluation split: occluded or out-of-view."""
        return (self.labels == Visibility.OCCLUDED) | (
            self.labels == Visibility.OUT_OF_VIEW
        )

    def visible(self) -> np.ndarray:
        return self.labels == Visibility.VISIBLE


def compute_occlusion_mask(
    target_view: ViewFrame,
    source_intrinsics: Intrinsics,
    source_extrinsics: Extrinsics,
    source_depth: DepthFrame,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> OcclusionMask:
    """Classify every target pixel with valid depth as visible, occluded,
    or out-of-view with respect to the source camera.

    The source depth lookup is nearest-pixel (not bilinear) to avoid mixing
    depths across silhouettes; a point is occluded when its source-frame
    depth exceeds ``D_src * (1 + rel_tol) + abs_tol``. Invalid source depth
    is treated as infinitely far, i.e. visible.
    """
    target_depth = target_view.depth.values
    labels = np.full(target_depth.shape, Visibility.NO_DATA, dtype=np.uint8)
    rows, cols = np.nonzero(target_depth > 0)
    if rows.size == 0:
        return OcclusionMask(labels)

    points_cam = unproject_pixel(
        target_view.intrinsics,
        cols + 0.5,
        rows + 0.5,
        target_depth[rows, cols].astype(np.float64),
    )
    world = target_view.extrinsics.camera_to_world(points_cam)
    src_cam = source_extrinsics.world_to_camera(world)
    z_src = src_cam[:, 2]

    in_front = z_src > 0
    u = np.zeros_like(z_src)
    v = np.zeros_like(z_src)
    u[in_front] = (
        source_intrinsics.fx * src_cam[in_front, 0] / z_src[in_front]
        + source_intrinsics.cx
    )
    v[in_front] = (
        source_intrinsics.fy * src_cam[in_front, 1] / z_src[in_front]
        + source_intrinsics.cy
    )
    ix = np.floor(u).astype(np.int64)
    iy = np.floor(v).astype(np.int64)
    in_frustum = (
        in_front
        & (ix >= 0)
        & (ix < source_intrinsics.width)
        & (iy >= 0)
        & (iy < source_intrinsics.height)
    )

    result = np.full(rows.size, Visibility.OUT_OF_VIEW, dtype=np.uint8)
    d_src = source_depth.values[iy[in_frustum], ix[in_frustum]].astype(np.float64)
    # Sentinel source depth means the source saw nothing along that ray.
    d_src = np.where(d_src > 0, d_src, np.inf)
    occluded = z_src[in_frustum] > d_src * (1.0 + rel_tol) + abs_tol
    result[in_frustum] = np.where(occluded, Visibility.OCCLUDED, Visibility.VISIBLE)

    labels[rows, cols] = result
    return OcclusionMask(labels)
