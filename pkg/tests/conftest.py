"""Shared fixtures and the brute-force ray-cast oracle used by occlusion
and baseline tests."""

from __future__ import annotations

import numpy as np
import pytest

from scene4d import synth
from scene4d.camera import Intrinsics, PoseDescription, pose_to_extrinsics


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_intrinsics(width: int = 128, height: int = 96) -> Intrinsics:
    from scene4d.camera import intrinsics_from_fov

    return intrinsics_from_fov(width, height, 53.1)


@pytest.fixture
def two_sphere_scene():
    """Sphere A fully eclipsing sphere B as seen from azimuth 0. Both float
    above the camera height so rays past B escape upward (true holes)."""
    spheres = (
        synth.Sphere((4.0, 0.0, 4.0), (0, 0, 0), 1.5, (0.7, 0.3, 0.3), 2),
        synth.Sphere((-2.0, 0.0, 4.0), (0, 0, 0), 1.5, (0.3, 0.3, 0.7), 11),
    )
    return synth.SceneSpec(spheres=spheres, frame_count=2, fps=24.0)


def render_scene_view(spec, pose: PoseDescription, intrinsics: Intrinsics, t: int = 0):
    centers = synth.simulate(spec, t)
    return synth.render_analytic(
        spec, centers, intrinsics, pose_to_extrinsics(pose), timestamp=t
    )


def raycast_first_hit(spec, centers, origins, directions):
    """Distance along each (unnormalized) ray to the first scene hit, inf on
    miss. Independent of the renderer: straight quadratic / plane solves."""
    n = directions.shape[0]
    a = np.einsum("ij,ij->i", directions, directions)
    best = np.full(n, np.inf)
    for i, sphere in enumerate(spec.spheres):
        oc = origins - centers[i]
        b = 2.0 * np.einsum("ij,ij->i", directions, oc)
        c = np.einsum("ij,ij->i", oc, oc) - sphere.radius**2
        disc = b * b - 4.0 * a * c
        hit = disc > 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
        t = np.where(t_near > 1e-9, t_near, t_far)
        ok = hit & (t > 1e-9)
        best = np.where(ok & (t < best), t, best)
    dz = directions[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = -origins[:, 2] / dz
    ok = (dz != 0) & (t_ground > 1e-9)
    best = np.where(ok & (t_ground < best), t_ground, best)
    return best


def raycast_occlusion_labels(spec, centers, source_intr, source_extr, world_points):
    """Brute-force visibility of world points from the source camera:
    0 visible, 1 occluded, 2 out of view (same coding as Visibility)."""
    src_cam = source_extr.world_to_camera(world_points)
    z = src_cam[:, 2]
    labels = np.full(world_points.shape[0], 2, dtype=np.uint8)
    in_front = z > 0
    u = np.zeros_like(z)
    v = np.zeros_like(z)
    u[in_front] = source_intr.fx * src_cam[in_front, 0] / z[in_front] + source_intr.cx
    v[in_front] = source_intr.fy * src_cam[in_front, 1] / z[in_front] + source_intr.cy
    in_frustum = (
        in_front
        & (u >= 0)
        & (u < source_intr.width)
        & (v >= 0)
        & (v < source_intr.height)
    )
    origin = source_extr.camera_center
    pts = world_points[in_frustum]
    dirs = pts - origin
    dist = np.linalg.norm(dirs, axis=1)
    t_hit = raycast_first_hit(spec, centers, np.broadcast_to(origin, dirs.shape), dirs)
    # Rays are unnormalized (parameter 1 reaches the point), so a first hit
    # meaningfully before parameter 1 marks occlusion. The margin mirrors
    # the mask's depth tolerance, converted to the ray parameterization.
    occluded = t_hit < 1.0 - (1e-3 + 0.05 / np.maximum(dist, 1e-9))
    labels[in_frustum] = np.where(occluded, 1, 0).astype(np.uint8)
    return labels
