"""Replay orchestration: keyframing, adjustment scheduling, evaluation."""

import pytest

from linemap.config import Config
from linemap.pipeline import run_evaluation, run_merge
from linemap.scan_io import SegmentMap, dump_segment_map


class TestRunMerge:
    def test_rejects_unknown_merger(self, loop_synth, config):
        with pytest.raises(ValueError, match="unknown merger"):
            run_merge(loop_synth.scans[:5], loop_synth.exact_trajectory, config, merger="x")

    def test_rejects_adjustment_for_one_to_one(self, loop_synth, config):
        with pytest.raises(ValueError, match="does not support adjustment"):
            run_merge(loop_synth.scans[:5], loop_synth.exact_trajectory, config,
                      merger="oto", optimized_trajectory=loop_synth.exact_trajectory)

    def test_rejects_markers_without_trajectory(self, loop_synth, config):
        with pytest.raises(ValueError, match="need an optimized trajectory"):
            run_merge(loop_synth.scans[:5], loop_synth.exact_trajectory, config,
                      adjust_at=[3])

    def test_keyframing_skips_stationary_scans(self, loop_synth, config):
        scans = loop_synth.scans[:100]
        result = run_merge(scans, loop_synth.exact_trajectory, config)
        assert result.processed + result.skipped_keyframe == len(scans)
        assert result.skipped_keyframe > 0
        assert result.segments_extracted >= 3 * result.processed
        assert len(result.merge_seconds) == result.processed

    def test_scans_without_poses_are_skipped(self, loop_synth, config):
        scans = loop_synth.scans[:50]
        half = loop_synth.exact_trajectory
        from linemap.scan_io import Trajectory
        sparse = Trajectory.from_pairs(
            (i, half.pose_for(i)) for i in range(0, 50, 2)
        )
        result = run_merge(scans, sparse, config)
        assert result.skipped_no_pose == 25

    def test_adjustment_marker_fires_once(self, loop_synth, config, loop_lap_boundary):
        result = run_merge(
            loop_synth.scans,
            loop_synth.odometry_trajectory,
            config,
            optimized_trajectory=loop_synth.exact_trajectory,
            adjust_at=[loop_lap_boundary],
        )
        assert len(result.adjust_seconds) == 1
        result.mapper.check_invariants()

    def test_final_adjust_without_markers(self, loop_synth, config):
        scans = loop_synth.scans[:120]
        drifted = run_merge(scans, loop_synth.odometry_trajectory, config)
        corrected = run_merge(
            scans,
            loop_synth.odometry_trajectory,
            config,
            optimized_trajectory=loop_synth.exact_trajectory,
        )
        assert len(corrected.adjust_seconds) == 1
        # adjusted map must differ from the drifted one
        a = dump_segment_map(drifted.mapper.snapshot())
        b = dump_segment_map(corrected.mapper.snapshot())
        assert a != b

    def test_replay_is_deterministic(self, loop_synth, config):
        scans = loop_synth.scans[:150]
        a = run_merge(scans, loop_synth.exact_trajectory, config)
        b = run_merge(scans, loop_synth.exact_trajectory, config)
        assert dump_segment_map(a.mapper.snapshot()) == dump_segment_map(b.mapper.snapshot())

    def test_timing_aggregates(self, loop_synth, config):
        result = run_merge(loop_synth.scans[:80], loop_synth.exact_trajectory, config)
        assert result.total_merge_seconds == pytest.approx(sum(result.merge_seconds))
        assert result.mean_merge_seconds == pytest.approx(
            sum(result.merge_seconds) / len(result.merge_seconds)
        )


@pytest.fixture(scope="module")
def merged(loop_synth, config):
    return run_merge(loop_synth.scans, loop_synth.exact_trajectory, config)


class TestRunEvaluation:
    def test_quality_only_without_correspondences(self, merged, loop_synth, config):
        smap = merged.mapper.filter_by_weight(int(config.get("mapper.min_updates")))
        out = run_evaluation(smap, loop_synth.scans, loop_synth.exact_trajectory, config)
        assert out.error is None and out.distance is None
        assert out.quality.q > 0.9
        assert out.table_cells > 0
        assert out.registered_points > 0

    def test_error_with_correspondences(self, merged, loop_synth, config):
        smap = merged.mapper.snapshot()
        out = run_evaluation(
            smap, loop_synth.scans, loop_synth.exact_trajectory, config,
            correspondences=merged.mapper.subsets,
        )
        assert out.error is not None
        assert out.error.e < 0.02  # centimeter-level on a clean synthetic loop
        assert out.distance is not None
        assert out.distance >= out.error.e

    def test_frame_mismatch_warning(self, merged, loop_synth, config):
        from dataclasses import replace
        smap = merged.mapper.filter_by_weight(int(config.get("mapper.min_updates")))
        far = SegmentMap(segments={
            idx: replace(
                seg,
                start=replace(seg.start, x=seg.start.x + 500.0),
                end=replace(seg.end, x=seg.end.x + 500.0),
            )
            for idx, seg in smap.segments.items()
        })
        out = run_evaluation(far, loop_synth.scans, loop_synth.exact_trajectory, config)
        assert any("different frames" in w for w in out.warnings)

    def test_record_lines_shape(self, merged, loop_synth, config):
        smap = merged.mapper.snapshot()
        out = run_evaluation(
            smap, loop_synth.scans, loop_synth.exact_trajectory, config,
            correspondences=merged.mapper.subsets,
        )
        lines = out.record_lines()
        keys = [line.split("=", 1)[0] for line in lines]
        for expected in ("quality.q", "quality.normalized_percent", "quality.total_pixels",
                         "table.cells", "table.points", "error.e", "distance.value"):
            assert expected in keys
        # every line parses back to a float or int
        for line in lines:
            key, value = line.split("=", 1)
            if key == "quality.pair":
                a, b = value.split(",")
                int(a), int(b)
            else:
                float(value)

    def test_record_lines_are_deterministic(self, merged, loop_synth, config):
        smap = merged.mapper.filter_by_weight(int(config.get("mapper.min_updates")))
        a = run_evaluation(smap, loop_synth.scans, loop_synth.exact_trajectory, config)
        b = run_evaluation(smap, loop_synth.scans, loop_synth.exact_trajectory, config)
        assert a.record_lines() == b.record_lines()
