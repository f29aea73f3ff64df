import numpy as np
import pytest

from scene4d import synth
from scene4d.camera import (
    Extrinsics,
    Intrinsics,
    PoseDescription,
    pose_to_extrinsics,
    project,
)
from scene4d.fusion import (
    DepthFrame,
    FusedPointCloud,
    ViewFrame,
    fuse_frame,
    read_point_records,
    unproject_view,
    write_point_records,
)

from conftest import render_scene_view, small_intrinsics

K = Intrinsics(width=8, height=6, fx=10.0, fy=10.0, cx=4.0, cy=3.0)


def _view_with_depth(depth, rgb=None, semantic=None, extrinsics=None, timestamp=0):
    h, w = depth.shape
    if rgb is None:
        rgb = np.zeros((h, w, 3), dtype=np.float32)
    return ViewFrame(
        rgb=rgb,
        depth=DepthFrame(depth),
        intrinsics=Intrinsics(width=w, height=h, fx=10.0, fy=10.0, cx=w / 2, cy=h / 2),
        extrinsics=extrinsics or Extrinsics.identity(),
        timestamp=timestamp,
        semantic=semantic,
    )


class TestUnprojectView:
    def test_single_pixel_at_principal_point(self):
        depth = np.zeros((6, 8), dtype=np.float32)
        # Pixel whose center is the principal point (cx=4, cy=3 -> pixel 3,3
        # has center 3.5... use cx-0.5 trick: pixel (3, 3) center = (3.5, 3.5)).
        k = Intrinsics(width=8, height=6, fx=10.0, fy=10.0, cx=3.5, cy=3.5)
        depth[3, 3] = 2.0
        view = ViewFrame(
            rgb=np.full((6, 8, 3), 0.25, dtype=np.float32),
            depth=DepthFrame(depth),
            intrinsics=k,
            extrinsics=Extrinsics.identity(),
            timestamp=0,
        )
        cloud = unproject_view(view)
        assert len(cloud) == 1
        np.testing.assert_allclose(cloud.positions[0], [0, 0, 2.0], atol=1e-7)
        np.testing.assert_allclose(cloud.colors[0], 0.25)

    def test_all_invalid_is_empty(self):
        view = _view_with_depth(np.zeros((6, 8), dtype=np.float32))
        cloud = unproject_view(view)
        assert len(cloud) == 0

    def test_point_count_equals_valid_pixels(self, rng):
        depth = rng.uniform(1, 10, size=(6, 8)).astype(np.float32)
        depth[rng.random((6, 8)) < 0.4] = 0.0
        view = _view_with_depth(depth)
        assert len(unproject_view(view)) == int((depth > 0).sum())

    def test_far_plane_drops_pixels(self):
        depth = np.full((6, 8), 600.0, dtype=np.float32)
        depth[0, 0] = 5.0
        view = _view_with_depth(depth)
        assert len(unproject_view(view, far_plane=500.0)) == 1

    def test_reprojection_recovers_pixel_centers(self, rng):
        pose = pose_to_extrinsics(PoseDescription(30, 20, 10))
        depth = rng.uniform(1, 20, size=(6, 8)).astype(np.float32)
        view = _view_with_depth(depth, extrinsics=pose)
        cloud = unproject_view(view)
        cam_pts = pose.world_to_camera(cloud.positions.astype(np.float64))
        u, v, z = project(view.intrinsics, cam_pts)
        rows, cols = np.nonzero(depth > 0)
        # float32 position storage limits recovery to ~1e-3 px / 1e-5 m.
        np.testing.assert_allclose(u, cols + 0.5, atol=1e-3)
        np.testing.assert_allclose(v, rows + 0.5, atol=1e-3)
        np.testing.assert_allclose(z, depth[rows, cols], atol=1e-4)

    def test_sphere_surface_oracle(self, two_sphere_scene):
        intr = small_intrinsics()
        view = render_scene_view(two_sphere_scene, PoseDescription(0, 10, 15), intr)
        cloud = unproject_view(view)
        centers = synth.simulate(two_sphere_scene, 0)
        pos = cloud.positions.astype(np.float64)
        d_ground = np.abs(pos[:, 2])
        radii = np.array([s.radius for s in two_sphere_scene.spheres])
        d_sphere = np.min(
            np.abs(np.linalg.norm(pos[:, None] - centers[None], axis=2) - radii[None]),
            axis=1,
        )
        assert np.minimum(d_ground, d_sphere).max() <= 1e-4


class TestFuseFrame:
    def test_single_view_matches_unproject(self, rng):
        depth = rng.uniform(1, 10, size=(6, 8)).astype(np.float32)
        view = _view_with_depth(depth)
        fused = fuse_frame([view])
        solo = unproject_view(view)
        np.testing.assert_array_equal(fused.positions, solo.positions)

    def test_disjoint_views_concatenate(self):
        d1 = np.zeros((6, 8), dtype=np.float32)
        d2 = np.zeros((6, 8), dtype=np.float32)
        d1[:3] = 4.0
        d2[3:] = 6.0
        fused = fuse_frame([_view_with_depth(d1), _view_with_depth(d2)])
        assert len(fused) == int((d1 > 0).sum() + (d2 > 0).sum())
        assert set(np.unique(fused.source_view)) == {0, 1}

    def test_timestamp_mismatch_raises(self):
        v1 = _view_with_depth(np.ones((6, 8), dtype=np.float32), timestamp=0)
        v2 = _view_with_depth(np.ones((6, 8), dtype=np.float32), timestamp=1)
        with pytest.raises(ValueError):
            fuse_frame([v1, v2])

    def test_order_independent_up_to_permutation(self, rng):
        views = []
        for t in range(3):
            depth = rng.uniform(1, 10, size=(6, 8)).astype(np.float32)
            rgb = rng.random((6, 8, 3)).astype(np.float32)
            views.append(_view_with_depth(depth, rgb=rgb))
        a = fuse_frame(views)
        b = fuse_frame(views[::-1])

        def as_set(cloud, remap):
            return {
                (tuple(p), tuple(c), remap[v])
                for p, c, v in zip(
                    cloud.positions.tolist(), cloud.colors.tolist(), cloud.source_view
                )
            }

        assert as_set(a, {0: 0, 1: 1, 2: 2}) == as_set(b, {0: 2, 1: 1, 2: 0})

    def test_multi_view_sphere_consistency(self, two_sphere_scene):
        intr = small_intrinsics(64, 48)
        views = [
            render_scene_view(two_sphere_scene, PoseDescription(az, 15, 15), intr)
            for az in (0, 90, 180, 270)
        ]
        fused = fuse_frame(views)
        centers = synth.simulate(two_sphere_scene, 0)
        pos = fused.positions.astype(np.float64)
        radii = np.array([s.radius for s in two_sphere_scene.spheres])
        d_sphere = np.min(
            np.abs(np.linalg.norm(pos[:, None] - centers[None], axis=2) - radii[None]),
            axis=1,
        )
        surface = np.minimum(np.abs(pos[:, 2]), d_sphere)
        assert surface.max() <= 1e-3


class TestPointRecords:
    def test_round_trip(self, tmp_path, rng):
        n = 257
        cloud = FusedPointCloud(
            positions=rng.uniform(-10, 10, size=(n, 3)).astype(np.float32),
            colors=(rng.integers(0, 256, size=(n, 3)) / 255.0).astype(np.float32),
            source_view=rng.integers(0, 16, size=n).astype(np.uint8),
            timestamp=4,
            labels=rng.integers(0, 20, size=n).astype(np.uint16),
        )
        path = tmp_path / "frame_0004.bin"
        write_point_records(path, cloud)
        assert path.stat().st_size == 18 * n
        back = read_point_records(path)
        np.testing.assert_array_equal(back.positions, cloud.positions)
        np.testing.assert_array_equal(back.colors, cloud.colors)
        np.testing.assert_array_equal(back.labels, cloud.labels)
        np.testing.assert_array_equal(back.source_view, cloud.source_view)
        assert back.timestamp == 4

    def test_rewrite_byte_identical(self, tmp_path, rng):
        cloud = FusedPointCloud(
            positions=rng.uniform(-5, 5, size=(64, 3)).astype(np.float32),
            colors=rng.random((64, 3)).astype(np.float32),
            source_view=np.zeros(64, dtype=np.uint8),
            timestamp=0,
        )
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        write_point_records(p1, cloud)
        write_point_records(p2, read_point_records(p1))
        assert p1.read_bytes() == p2.read_bytes()
        assert (tmp_path / "a.bin.json").read_text() == (tmp_path / "b.bin.json").read_text()


class TestViewFrameValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ViewFrame(
                rgb=np.zeros((6, 8, 3), dtype=np.float32),
                depth=DepthFrame(np.zeros((5, 8), dtype=np.float32)),
                intrinsics=K,
                extrinsics=Extrinsics.identity(),
                timestamp=0,
            )

    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            DepthFrame(np.full((4, 4), -1.0, dtype=np.float32))

    def test_nonfinite_depth_rejected(self):
        bad = np.ones((4, 4), dtype=np.float32)
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            DepthFrame(bad)
