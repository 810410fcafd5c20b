"""Log, trajectory, and map file formats plus the SVG export."""

import math

import pytest

from linemap.geometry import LineSegment, Point, Pose2D
from linemap.scan_io import (
    LaserScan,
    MalformedLogError,
    SegmentMap,
    Trajectory,
    dump_carmen_log,
    dump_segment_map,
    dump_trajectory,
    export_svg,
    parse_carmen_log,
    parse_segment_map,
    parse_trajectory,
    write_segment_map,
    write_svg,
)

FLASER_3 = "FLASER 3 1.5 2.5 3.5 0.1 0.2 0.3 0.1 0.2 0.3 12.5 host 12.5"


class TestLaserScan:
    def test_beam_angles(self):
        scan = LaserScan(scan_index=0, ranges=(1.0, 1.0, 1.0),
                         angle_min=-math.pi / 2, angle_increment=math.pi / 2)
        assert scan.beam_angle(0) == -math.pi / 2
        assert scan.beam_angle(2) == pytest.approx(math.pi / 2)

    def test_validity_rules(self):
        scan = LaserScan(scan_index=0, ranges=(0.0, -1.0, 5.0, 80.0, 81.0),
                         angle_min=0.0, angle_increment=0.01, max_range=80.0)
        # zero, negative, and at-or-beyond max range are all invalid
        assert scan.valid_count() == 1

    def test_empty_ranges_rejected(self):
        with pytest.raises(ValueError):
            LaserScan(scan_index=0, ranges=(), angle_min=0.0, angle_increment=0.01)


class TestCarmenLog:
    def test_parses_flaser(self):
        scans = parse_carmen_log([FLASER_3])
        assert len(scans) == 1
        scan = scans[0]
        assert scan.ranges == (1.5, 2.5, 3.5)
        assert scan.scan_index == 0
        assert scan.angle_min == -math.pi / 2
        assert scan.angle_increment == pytest.approx(math.pi / 2)
        assert scan.odometry == Pose2D(0.1, 0.2, 0.3)

    def test_skips_other_records(self):
        lines = ["# comment", "PARAM robot_frontlaser_offset 0.08", FLASER_3, "ODOM 1 2 3 4 5 6 7 h 7"]
        scans = parse_carmen_log(lines)
        assert len(scans) == 1

    def test_sequential_indices(self):
        scans = parse_carmen_log([FLASER_3, "junk", FLASER_3])
        assert [s.scan_index for s in scans] == [0, 1]

    def test_token_count_checked(self):
        with pytest.raises(MalformedLogError, match="line 1"):
            parse_carmen_log(["FLASER 3 1.0 2.0 3.0 0.1 0.2"])

    def test_beam_count_minimum(self):
        with pytest.raises(MalformedLogError, match="at least 2 beams"):
            parse_carmen_log(["FLASER 1 1.0 0 0 0 0 0 0 1.0 h 1.0"])

    def test_non_numeric_field(self):
        bad = FLASER_3.replace("2.5", "oops", 1)
        with pytest.raises(MalformedLogError, match="line 1"):
            parse_carmen_log([bad])

    def test_error_names_line_number(self):
        with pytest.raises(MalformedLogError, match="line 3"):
            parse_carmen_log(["# header", FLASER_3, "FLASER x"])

    def test_round_trip(self):
        scans = parse_carmen_log([FLASER_3, FLASER_3])
        back = parse_carmen_log(dump_carmen_log(scans).splitlines())
        assert len(back) == 2
        for a, b in zip(scans, back):
            assert a.ranges == pytest.approx(b.ranges, abs=1e-4)
            assert a.odometry.x == pytest.approx(b.odometry.x, abs=1e-6)
            assert a.odometry.theta == pytest.approx(b.odometry.theta, abs=1e-6)

    def test_dump_empty(self):
        assert dump_carmen_log([]) == ""


class TestTrajectory:
    def test_from_pairs_and_lookup(self):
        traj = Trajectory.from_pairs([(0, Pose2D(0, 0, 0)), (5, Pose2D(1, 2, 3))])
        assert len(traj) == 2
        assert 5 in traj and 3 not in traj
        assert traj.pose_for(5) == Pose2D(1, 2, 3)
        assert traj.scan_indices() == [0, 5]

    def test_missing_pose_raises(self):
        traj = Trajectory.from_pairs([(0, Pose2D(0, 0, 0))])
        with pytest.raises(KeyError):
            traj.pose_for(1)

    def test_indices_must_increase(self):
        with pytest.raises(ValueError):
            Trajectory.from_pairs([(3, Pose2D(0, 0, 0)), (3, Pose2D(1, 1, 1))])

    def test_parse_skips_comments_and_blanks(self):
        traj = parse_trajectory(["# poses", "", "0 1.0 2.0 0.5", "   ", "2 3.0 4.0 -0.5"])
        assert traj.scan_indices() == [0, 2]

    def test_parse_rejects_bad_field_count(self):
        with pytest.raises(MalformedLogError, match="line 2"):
            parse_trajectory(["0 1 2 3", "1 2 3"])

    def test_parse_rejects_decreasing_index(self):
        with pytest.raises(MalformedLogError, match="does not increase"):
            parse_trajectory(["5 0 0 0", "4 0 0 0"])

    def test_round_trip_is_exact(self):
        traj = Trajectory.from_pairs(
            [(0, Pose2D(0.1 + 0.2, -3.337779, 0.123456789012345)),
             (7, Pose2D(1e-17, 2.0, -math.pi + 1e-12))]
        )
        back = parse_trajectory(dump_trajectory(traj).splitlines())
        for (ia, pa), (ib, pb) in zip(traj, back):
            assert ia == ib
            assert (pa.x, pa.y, pa.theta) == (pb.x, pb.y, pb.theta)

    def test_rewrite_is_byte_stable(self):
        text = dump_trajectory(Trajectory.from_pairs([(0, Pose2D(0.1, 0.2, 0.3))]))
        assert dump_trajectory(parse_trajectory(text.splitlines())) == text


class TestSegmentMapFile:
    def make_map(self):
        return SegmentMap(
            segments={
                0: LineSegment(Point(0.0, 0.0), Point(4.0, 0.0), weight=12, index=0),
                3: LineSegment(Point(1.0, 2.0), Point(1.0, 6.5), weight=3, index=3),
            },
            metadata={"merger": "cae", "config.eval.lambda": "1.0"},
        )

    def test_round_trip(self):
        smap = self.make_map()
        back = parse_segment_map(dump_segment_map(smap).splitlines())
        assert sorted(back.segments) == [0, 3]
        assert back.metadata == smap.metadata
        for idx, seg in smap.ordered():
            got = back.segments[idx]
            assert got.weight == seg.weight
            assert got.index == idx
            assert got.start.x == pytest.approx(seg.start.x, abs=1e-6)
            assert got.end.y == pytest.approx(seg.end.y, abs=1e-6)

    def test_dump_is_sorted_and_deterministic(self):
        text = dump_segment_map(self.make_map())
        assert text.startswith("linemap v1\n")
        lines = text.splitlines()
        assert lines[1] == "# config.eval.lambda=1.0"
        assert lines[2] == "# merger=cae"
        assert lines[3].startswith("0 ") and lines[4].startswith("3 ")
        assert dump_segment_map(parse_segment_map(lines)) == text

    def test_header_required(self):
        with pytest.raises(MalformedLogError, match="header"):
            parse_segment_map(["not a map", "0 0 0 1 1 1"])

    def test_empty_file_rejected(self):
        with pytest.raises(MalformedLogError, match="empty"):
            parse_segment_map([])

    def test_degenerate_row_rejected(self):
        with pytest.raises(MalformedLogError, match="line 2"):
            parse_segment_map(["linemap v1", "0 1.0 1.0 1.0 1.0 4"])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(MalformedLogError, match="line 2"):
            parse_segment_map(["linemap v1", "0 0.0 0.0 1.0 0.0 0"])

    def test_duplicate_index_rejected(self):
        with pytest.raises(MalformedLogError, match="duplicate"):
            parse_segment_map(["linemap v1", "0 0 0 1 0 1", "0 0 1 1 1 1"])

    def test_write_and_read_file(self, tmp_path):
        path = tmp_path / "map.txt"
        write_segment_map(self.make_map(), path)
        from linemap.scan_io import read_segment_map

        assert len(read_segment_map(path)) == 2


class TestSvgExport:
    def test_contains_segments_and_endpoints(self):
        svg = export_svg(SegmentMap(segments={
            0: LineSegment(Point(0.0, 0.0), Point(2.0, 0.0), weight=1, index=0),
        }))
        assert svg.count("<line") == 1
        assert svg.count("<circle") == 2
        assert "<svg" in svg and "</svg>" in svg

    def test_header_comments_embedded(self):
        svg = export_svg(SegmentMap(), header_lines=["config.a=1", "tricky -- comment"])
        assert "<!-- config.a=1 -->" in svg
        assert "--" not in svg.split("<!-- tricky")[1].split("-->")[0]

    def test_scan_points_drawn(self):
        svg = export_svg(SegmentMap(), scan_points=[(0.0, 0.0), (1.0, 1.0)])
        assert svg.count("circle") >= 2

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            export_svg(SegmentMap(), pixels_per_meter=0.0)

    def test_write_svg(self, tmp_path):
        path = tmp_path / "map.svg"
        write_svg(SegmentMap(segments={
            0: LineSegment(Point(0.0, 0.0), Point(1.0, 1.0), weight=1, index=0),
        }), path)
        assert path.read_text(encoding="utf-8").startswith("<svg")
