"""Synthetic world generation: planning, drift, and ray casting."""

import math

import pytest

from linemap.geometry import Pose2D
from linemap.synth import NoiseParams, SynthResult, WorldSpec, generate, plan_trajectory, apply_drift

SQUARE = WorldSpec(
    walls=[(0.0, 0.0, 10.0, 0.0), (10.0, 0.0, 10.0, 10.0),
           (10.0, 10.0, 0.0, 10.0), (0.0, 10.0, 0.0, 0.0)],
    waypoints=[(2.0, 2.0), (8.0, 2.0), (8.0, 8.0), (2.0, 8.0), (2.0, 2.0)],
    beams=181,
    fov_deg=180.0,
    step=0.5,
)


class TestWorldSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            WorldSpec(walls=[], waypoints=[(0, 0), (1, 0)])
        with pytest.raises(ValueError):
            WorldSpec(walls=[(0, 0, 1, 0)], waypoints=[(0, 0)])
        with pytest.raises(ValueError):
            WorldSpec(walls=[(0, 0, 1, 0)], waypoints=[(0, 0), (1, 0)], beams=1)
        with pytest.raises(ValueError):
            WorldSpec(walls=[(0, 0, 1, 0)], waypoints=[(0, 0), (1, 0)], step=0.0)

    def test_json_round_trip(self):
        back = WorldSpec.from_json(SQUARE.to_json())
        assert back.walls == [tuple(w) for w in SQUARE.walls]
        assert back.waypoints == [tuple(w) for w in SQUARE.waypoints]
        assert back.beams == SQUARE.beams
        assert back.step == SQUARE.step
        assert back.loops == SQUARE.loops


class TestPlanTrajectory:
    def test_steps_along_legs(self):
        traj = plan_trajectory(SQUARE)
        poses = [p for _i, p in traj]
        assert poses[0] == Pose2D(2.0, 2.0, 0.0)
        assert poses[1].x == pytest.approx(2.5)
        assert poses[1].theta == 0.0

    def test_corner_turns_in_place(self):
        traj = plan_trajectory(SQUARE)
        poses = [p for _i, p in traj]
        corner = [p for p in poses if p.x == 8.0 and p.y == 2.0]
        assert len(corner) >= 2  # arrival heading plus in-place turn steps
        assert any(p.theta > 0.1 for p in corner)

    def test_loops_multiply_poses(self):
        two = WorldSpec(walls=SQUARE.walls, waypoints=SQUARE.waypoints,
                        beams=SQUARE.beams, step=SQUARE.step, loops=2)
        assert len(plan_trajectory(two)) == 2 * len(plan_trajectory(SQUARE))

    def test_indices_sequential(self):
        traj = plan_trajectory(SQUARE)
        assert traj.scan_indices() == list(range(len(traj)))


class TestApplyDrift:
    def test_zero_noise_is_identity(self):
        traj = plan_trajectory(SQUARE)
        out = apply_drift(traj, NoiseParams())
        for (ia, pa), (ib, pb) in zip(traj, out):
            assert ia == ib
            assert pa.x == pytest.approx(pb.x, abs=1e-9)
            assert pa.y == pytest.approx(pb.y, abs=1e-9)
            assert pa.theta == pytest.approx(pb.theta, abs=1e-9)

    def test_heading_bias_accumulates(self):
        traj = plan_trajectory(SQUARE)
        bias = 1e-3
        out = apply_drift(traj, NoiseParams(heading_bias_rad_per_m=bias))
        first_leg = [p for _i, p in out][:5]
        # 0.5 m per step: heading grows by bias * 0.5 each step
        for k, pose in enumerate(first_leg):
            assert pose.theta == pytest.approx(bias * 0.5 * k, abs=1e-12)

    def test_translation_scale_stretches_path(self):
        traj = plan_trajectory(SQUARE)
        out = apply_drift(traj, NoiseParams(translation_scale=1.1))
        p1 = out.pose_for(1)
        assert p1.x == pytest.approx(2.0 + 0.55, abs=1e-12)

    def test_start_pose_anchored(self):
        traj = plan_trajectory(SQUARE)
        out = apply_drift(traj, NoiseParams(heading_bias_rad_per_m=0.01, translation_scale=1.2))
        assert out.pose_for(0) == traj.pose_for(0)


class TestGenerate:
    def test_deterministic_with_seed(self):
        a = generate(SQUARE, NoiseParams(range_sigma=0.02), seed=5)
        b = generate(SQUARE, NoiseParams(range_sigma=0.02), seed=5)
        assert all(x.ranges == y.ranges for x, y in zip(a.scans, b.scans))

    def test_seed_changes_noise(self):
        a = generate(SQUARE, NoiseParams(range_sigma=0.02), seed=5)
        b = generate(SQUARE, NoiseParams(range_sigma=0.02), seed=6)
        assert any(x.ranges != y.ranges for x, y in zip(a.scans, b.scans))

    def test_noiseless_ranges_exact(self):
        world = WorldSpec(walls=[(0.0, 4.0, 10.0, 4.0)], waypoints=[(5.0, 0.0), (6.0, 0.0)],
                          beams=3, fov_deg=180.0, step=0.5, max_range=20.0)
        result = generate(world, NoiseParams(), seed=0)
        scan = result.scans[0]
        # facing +x with a 180 degree fan: beams at -90, 0, +90 degrees
        assert scan.ranges[0] == 20.0   # -90 looks away from the wall
        assert scan.ranges[1] == 20.0   # straight ahead runs parallel
        assert scan.ranges[2] == pytest.approx(4.0, abs=1e-9)

    def test_result_structure(self):
        result = generate(SQUARE, NoiseParams(range_sigma=0.01), seed=1)
        assert isinstance(result, SynthResult)
        assert len(result.scans) == len(result.exact_trajectory)
        assert result.scans[0].angle_min == pytest.approx(-math.pi / 2)
        assert result.scans[0].angle_increment == pytest.approx(math.pi / 180)

    def test_odometry_attached_from_drifted_trajectory(self):
        noise = NoiseParams(range_sigma=0.0, heading_bias_rad_per_m=0.01)
        result = generate(SQUARE, noise, seed=0)
        assert result.odometry_trajectory is not result.exact_trajectory
        for scan in result.scans[:10]:
            assert scan.odometry == result.odometry_trajectory.pose_for(scan.scan_index)

    def test_no_drift_shares_exact_trajectory(self):
        result = generate(SQUARE, NoiseParams(range_sigma=0.01), seed=0)
        assert result.odometry_trajectory is result.exact_trajectory

    def test_noise_only_on_hits(self):
        world = WorldSpec(walls=[(0.0, 4.0, 10.0, 4.0)], waypoints=[(5.0, 0.0), (6.0, 0.0)],
                          beams=3, fov_deg=180.0, step=0.5, max_range=20.0)
        result = generate(world, NoiseParams(range_sigma=0.1), seed=3)
        scan = result.scans[0]
        assert scan.ranges[0] == 20.0  # misses stay exactly at max range
        assert scan.ranges[2] != pytest.approx(4.0, abs=1e-6)
