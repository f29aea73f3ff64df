import numpy as np
import pytest

from scene4d import synth
from scene4d.camera import PoseDescription, pose_to_extrinsics
from scene4d.fusion import DepthFrame, ViewFrame
from scene4d.occlusion import Visibility, compute_occlusion_mask

from conftest import (
    raycast_occlusion_labels,
    render_scene_view,
    small_intrinsics,
)


class TestSameCamera:
    def test_identical_views_all_visible(self, two_sphere_scene):
        intr = small_intrinsics()
        pose = PoseDescription(20, 15, 15)
        view = render_scene_view(two_sphere_scene, pose, intr)
        mask = compute_occlusion_mask(
            view, intr, pose_to_extrinsics(pose), view.depth
        )
        valid = view.depth.values > 0
        assert np.all(mask.labels[valid] == Visibility.VISIBLE)
        assert np.all(mask.labels[~valid] == Visibility.NO_DATA)


class TestPartition:
    def test_every_valid_pixel_classified(self, two_sphere_scene):
        intr = small_intrinsics()
        target = render_scene_view(two_sphere_scene, PoseDescription(90, 5, 15), intr)
        source_pose = PoseDescription(0, 5, 15)
        source = render_scene_view(two_sphere_scene, source_pose, intr)
        mask = compute_occlusion_mask(
            target, intr, pose_to_extrinsics(source_pose), source.depth
        )
        valid = target.depth.values > 0
        assert np.all(mask.labels[valid] <= Visibility.OUT_OF_VIEW)
        assert np.all(mask.labels[~valid] == Visibility.NO_DATA)
        assert np.array_equal(mask.valid(), valid)
        assert np.array_equal(
            mask.occluded_split() | mask.visible(), mask.valid()
        )


class TestHiddenSphere:
    def test_eclipsed_sphere_occluded_front_visible(self, two_sphere_scene):
        intr = small_intrinsics()
        source_pose = PoseDescription(0, 5, 15)
        target = render_scene_view(two_sphere_scene, PoseDescription(90, 5, 15), intr)
        source = render_scene_view(two_sphere_scene, source_pose, intr)
        mask = compute_occlusion_mask(
            target, intr, pose_to_extrinsics(source_pose), source.depth
        )
        in_frustum = mask.labels != Visibility.OUT_OF_VIEW
        hidden = (target.semantic == 11) & in_frustum
        front = (target.semantic == 2) & in_frustum
        assert hidden.sum() > 50 and front.sum() > 50
        assert (mask.labels[hidden] == Visibility.OCCLUDED).mean() > 0.95
        # The front sphere's surface seen from 90 deg is half source-facing.
        assert (mask.labels[front] == Visibility.VISIBLE).mean() > 0.4

    def test_point_behind_source_is_out_of_view(self):
        # A wall of valid target depth placed behind the source camera.
        intr = small_intrinsics(16, 12)
        target_pose = PoseDescription(0, 0, 20, (18.0, 0.0, 1.0))
        target_extr = pose_to_extrinsics(target_pose)
        depth = np.full((12, 16), 2.0, dtype=np.float32)
        target = ViewFrame(
            rgb=np.zeros((12, 16, 3), dtype=np.float32),
            depth=DepthFrame(depth),
            intrinsics=intr,
            extrinsics=target_extr,
            timestamp=0,
        )
        # Source sits at the scene center looking away from the wall.
        source_pose = PoseDescription(180, 0, 15, (0.0, 0.0, 1.0))
        source_depth = DepthFrame(np.zeros((12, 16), dtype=np.float32))
        mask = compute_occlusion_mask(
            target, intr, pose_to_extrinsics(source_pose), source_depth
        )
        assert np.all(mask.labels == Visibility.OUT_OF_VIEW)


class TestRayCastAgreement:
    def test_20_seeded_pose_pairs(self):
        rng = np.random.default_rng(2024)
        intr = small_intrinsics()
        agree = 0
        total = 0
        for _ in range(20):
            spheres = (
                synth.Sphere(
                    (float(rng.uniform(1, 5)), float(rng.uniform(-2, 2)), float(rng.uniform(2, 5))),
                    (0, 0, 0),
                    float(rng.uniform(0.8, 1.5)),
                    (0.6, 0.4, 0.4),
                    2,
                ),
                synth.Sphere(
                    (float(rng.uniform(-5, -1)), float(rng.uniform(-2, 2)), float(rng.uniform(2, 5))),
                    (0, 0, 0),
                    float(rng.uniform(0.8, 1.5)),
                    (0.4, 0.4, 0.6),
                    11,
                ),
            )
            scene = synth.SceneSpec(spheres=spheres, frame_count=1, fps=24.0)
            src_pose = PoseDescription(float(rng.uniform(0, 360)), float(rng.uniform(0, 40)), 15.0)
            dst_pose = PoseDescription(
                src_pose.azimuth_deg + float(rng.uniform(-90, 90)),
                float(rng.uniform(0, 40)),
                15.0,
            )
            source = render_scene_view(scene, src_pose, intr)
            target = render_scene_view(scene, dst_pose, intr)
            src_extr = pose_to_extrinsics(src_pose)
            mask = compute_occlusion_mask(target, intr, src_extr, source.depth)

            rows, cols = np.nonzero(target.depth.values > 0)
            from scene4d.camera import unproject_pixel

            world = target.extrinsics.camera_to_world(
                unproject_pixel(
                    intr, cols + 0.5, rows + 0.5,
                    target.depth.values[rows, cols].astype(np.float64),
                )
            )
            centers = synth.simulate(scene, 0)
            oracle = raycast_occlusion_labels(scene, centers, intr, src_extr, world)
            agree += int((mask.labels[rows, cols] == oracle).sum())
            total += rows.size
        assert total > 0
        assert agree / total >= 0.99


class TestMaskValidation:
    def test_rejects_out_of_range(self):
        from scene4d.occlusion import OcclusionMask

        with pytest.raises(ValueError):
            OcclusionMask(np.full((4, 4), 7, dtype=np.uint8))
