import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scene4d.camera import (
    Extrinsics,
    Intrinsics,
    PoseDescription,
    interpolate_pose,
    intrinsics_from_fov,
    motion_bucket,
    pose_delta,
    pose_from_camera_position,
    pose_to_extrinsics,
    project,
    relative_extrinsics,
    relative_transform,
    unproject_pixel,
    wrap_angle_deg,
)
from scene4d.trajectory import MAX90, MAX180

K = Intrinsics(width=128, height=96, fx=100.0, fy=100.0, cx=64.0, cy=48.0)

pose_params = st.tuples(
    st.floats(-720, 720),
    st.floats(-89.9, 89.9),
    st.floats(0.5, 30.0),
).map(lambda p: PoseDescription(p[0], p[1], p[2], (0.0, 0.0, 1.0)))


def random_pose(rng) -> PoseDescription:
    return PoseDescription(
        azimuth_deg=float(rng.uniform(0, 360)),
        elevation_deg=float(rng.uniform(-85, 85)),
        radius_m=float(rng.uniform(2, 25)),
        look_at=tuple(rng.uniform(-3, 3, size=3)),
    )


class TestPoseToExtrinsics:
    def test_axis_aligned(self):
        e = pose_to_extrinsics(PoseDescription(0, 0, 15, (0, 0, 1)))
        np.testing.assert_allclose(e.camera_center, [15, 0, 1], atol=1e-12)
        np.testing.assert_allclose(e.rotation[:, 2], [-1, 0, 0], atol=1e-12)

    def test_quarter_turn(self):
        e = pose_to_extrinsics(PoseDescription(90, 0, 15, (0, 0, 1)))
        np.testing.assert_allclose(e.camera_center, [0, 15, 1], atol=1e-9)
        np.testing.assert_allclose(e.rotation[:, 2], [0, -1, 0], atol=1e-9)

    def test_zenith_fallback(self):
        e = pose_to_extrinsics(PoseDescription(30, 90, 10, (0, 0, 1)))
        np.testing.assert_allclose(e.camera_center, [0, 0, 11], atol=1e-9)
        np.testing.assert_allclose(e.rotation[:, 2], [0, 0, -1], atol=1e-9)
        # right axis falls back to world +X
        np.testing.assert_allclose(e.rotation[:, 0], [1, 0, 0], atol=1e-9)

    def test_rigidity_and_center_recovery_seeded(self):
        rng = np.random.default_rng(42)
        for _ in range(500):
            p = random_pose(rng)
            e = pose_to_extrinsics(p)
            r = e.rotation
            assert np.max(np.abs(r.T @ r - np.eye(3))) <= 1e-9
            assert abs(np.linalg.det(r) - 1.0) <= 1e-9
            np.testing.assert_allclose(e.camera_center, p.camera_center(), atol=1e-9)

    def test_pose_position_inverse(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = random_pose(rng)
            q = pose_from_camera_position(p.camera_center(), p.look_at)
            np.testing.assert_allclose(q.camera_center(), p.camera_center(), atol=1e-9)
            assert math.isclose(q.radius_m, p.radius_m, abs_tol=1e-9)
            assert math.isclose(q.elevation_deg, p.elevation_deg, abs_tol=1e-7)


class TestRelativeExtrinsics:
    def test_self_relative_identity(self):
        e = pose_to_extrinsics(PoseDescription(33, 12, 14))
        rt = relative_extrinsics(e, e)
        np.testing.assert_allclose(rt.matrix, np.eye(4), atol=1e-12)

    def test_pure_translation(self):
        dst = np.eye(4)
        dst[:3, 3] = [1, 2, 3]
        rt = relative_extrinsics(Extrinsics.identity(), Extrinsics(dst))
        np.testing.assert_allclose(rt.matrix[:3, :3], np.eye(3), atol=1e-12)
        np.testing.assert_allclose(rt.matrix[:3, 3], [1, 2, 3], atol=1e-12)

    def test_inverse_composition_1000_pairs(self):
        # Oracle: direct matrix multiplication of both relative transforms.
        rng = np.random.default_rng(7)
        for _ in range(1000):
            a = pose_to_extrinsics(random_pose(rng))
            b = pose_to_extrinsics(random_pose(rng))
            ab = relative_extrinsics(a, b).matrix
            ba = relative_extrinsics(b, a).matrix
            assert np.max(np.abs(ab @ ba - np.eye(4))) <= 1e-9

    def test_params_match_pose_deltas(self):
        p1 = PoseDescription(10, 20, 14)
        p2 = PoseDescription(40, 5, 16)
        rt = relative_transform(p1, p2)
        assert rt.params == pose_delta(p1, p2)
        assert rt.params == (30.0, -15.0, 2.0)


class TestInterpolatePose:
    def test_endpoints_exact(self):
        p1 = PoseDescription(350, 10, 12)
        p2 = PoseDescription(10, 40, 18)
        assert interpolate_pose(p1, p2, 0.0) == p1
        assert interpolate_pose(p1, p2, 1.0) == p2

    def test_shortest_arc_wrap(self):
        p = interpolate_pose(PoseDescription(350, 0, 12), PoseDescription(10, 0, 12), 0.5)
        assert p.azimuth_deg % 360 == pytest.approx(0.0, abs=1e-12)

    def test_linear_midpoint(self):
        p = interpolate_pose(PoseDescription(0, 0, 12), PoseDescription(90, 30, 18), 0.5)
        assert (p.azimuth_deg, p.elevation_deg, p.radius_m) == (45, 15, 15)

    def test_alpha_out_of_range(self):
        with pytest.raises(ValueError):
            interpolate_pose(PoseDescription(0, 0, 12), PoseDescription(1, 0, 12), 1.5)

    @given(pose_params, pose_params, st.integers(1, 30))
    @settings(max_examples=50, deadline=None)
    def test_componentwise_monotone(self, p1, p2, steps):
        alphas = np.linspace(0, 1, steps + 1)
        poses = [interpolate_pose(p1, p2, float(a)) for a in alphas]
        # Unwrap azimuth: interior values are p1 + alpha * wrapped delta.
        delta = wrap_angle_deg(p2.azimuth_deg - p1.azimuth_deg)
        azimuths = [p1.azimuth_deg + a * delta for a in alphas]
        for seq in (
            azimuths,
            [p.elevation_deg for p in poses],
            [p.radius_m for p in poses],
        ):
            diffs = np.diff(seq)
            assert np.all(diffs >= -1e-9) or np.all(diffs <= 1e-9)


class TestProjection:
    def test_principal_point(self):
        u, v, z = project(K, np.array([0.0, 0.0, 5.0]))
        assert (u, v, z) == (64.0, 48.0, 5.0)

    def test_similar_triangles(self):
        k = Intrinsics(width=128, height=96, fx=100.0, fy=100.0, cx=50.0, cy=48.0)
        u, _, _ = project(k, np.array([1.0, 0.0, 2.0]))
        assert u == pytest.approx(100.0, abs=1e-12)

    def test_behind_camera_raises(self):
        with pytest.raises(ValueError):
            project(K, np.array([0.0, 0.0, -1.0]))
        with pytest.raises(ValueError):
            unproject_pixel(K, 10.0, 10.0, 0.0)

    @given(
        st.floats(0.0, 127.99),
        st.floats(0.0, 95.99),
        st.floats(0.1, 100.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_project_unproject_identity(self, u, v, depth):
        point = unproject_pixel(K, u, v, depth)
        u2, v2, z2 = project(K, point)
        assert abs(u2 - u) <= 1e-6 and abs(v2 - v) <= 1e-6
        assert abs(z2 - depth) <= 1e-9


class TestIntrinsicsFromFov:
    def test_90_degrees(self):
        k = intrinsics_from_fov(384, 256, 90.0)
        assert k.fx == pytest.approx(192.0, abs=1e-9)
        assert k.fx == k.fy and (k.cx, k.cy) == (192.0, 128.0)

    def test_kubric_fov(self):
        # Independent trigonometric evaluation: 192 / tan(26.55 deg).
        assert intrinsics_from_fov(384, 256, 53.1).fx == pytest.approx(384.2523, abs=1e-3)

    def test_driving_fov(self):
        # 512 / tan(42.5 deg).
        assert intrinsics_from_fov(1024, 576, 85.0).fx == pytest.approx(558.74995, abs=1e-3)

    def test_bad_fov(self):
        with pytest.raises(ValueError):
            intrinsics_from_fov(384, 256, 180.0)


class TestMotionBucket:
    def test_endpoints_and_midpoint(self):
        assert motion_bucket(0, 0, MAX90) == 0
        assert motion_bucket(90, 30, MAX90) == 255
        assert motion_bucket(45, 15, MAX90) == 128

    def test_clamps(self):
        assert motion_bucket(400, 100, MAX90) == 255

    def test_monotone_in_norm(self):
        rng = np.random.default_rng(0)
        pairs = rng.uniform(0, 1, size=(200, 2)) * [90, 30]
        norms = np.hypot(pairs[:, 0], pairs[:, 1])
        order = np.argsort(norms)
        buckets = [motion_bucket(*pairs[i], MAX90) for i in order]
        assert all(b2 >= b1 for b1, b2 in zip(buckets, buckets[1:]))
        assert motion_bucket(180, 60, MAX180) == 255


class TestInvariantValidation:
    def test_intrinsics_bounds(self):
        with pytest.raises(ValueError):
            Intrinsics(width=10, height=10, fx=-1, fy=1, cx=5, cy=5)
        with pytest.raises(ValueError):
            Intrinsics(width=10, height=10, fx=1, fy=1, cx=10, cy=5)

    def test_extrinsics_rejects_non_rigid(self):
        bad = np.eye(4)
        bad[0, 0] = 2.0
        with pytest.raises(ValueError):
            Extrinsics(bad)
        bad = np.eye(4)
        bad[3, 0] = 1e-12
        with pytest.raises(ValueError):
            Extrinsics(bad)

    def test_pose_bounds(self):
        with pytest.raises(ValueError):
            PoseDescription(0, 91, 10)
        with pytest.raises(ValueError):
            PoseDescription(0, 0, 0)

    def test_pose_convex_combination_valid(self):
        p1 = PoseDescription(30, -20, 5, (1, 2, 3))
        p2 = PoseDescription(290, 45, 9, (1, 2, 3))
        for alpha in (0.25, 0.5, 0.75):
            p = interpolate_pose(p1, p2, alpha)
            assert -90 <= p.elevation_deg <= 90 and p.radius_m > 0

    def test_extrinsics_matrix_immutable(self):
        e = Extrinsics.identity()
        with pytest.raises(ValueError):
            e.matrix[0, 0] = 2.0
