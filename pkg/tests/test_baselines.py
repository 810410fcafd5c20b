"""One-to-one merger baselines and their contrast with one-to-many."""

import math

import pytest

from linemap.baselines import OneToOneMapper, run_offline_one_to_one
from linemap.fusion import FusionThresholds
from linemap.geometry import LineSegment, Point, Pose2D
from linemap.mapper import LineSegmentMapper

THRESHOLDS = FusionThresholds(theta_max=math.radians(4.0), d_max=0.1, p_min=-0.1)
ORIGIN = Pose2D(0.0, 0.0, 0.0)


def seg(x1, y1, x2, y2):
    return LineSegment(Point(x1, y1), Point(x2, y2), weight=1)


def bridging_frames():
    """Two wall pieces, then one long view spanning both."""
    return [
        (0, ORIGIN, [seg(0, 0, 1, 0), seg(3, 0, 4, 0)]),
        (1, ORIGIN, [seg(0.5, 0.0, 3.5, 0.0)]),
    ]


class TestOneToOneAssociation:
    def test_merges_with_closest_only(self):
        # map lines 0.15 apart survive as two entries (0.15 > d_max)
        m = OneToOneMapper(THRESHOLDS)
        m.integrate_scan([seg(0, 0.0, 4, 0.0), seg(0, 0.15, 4, 0.15)], ORIGIN, 0)
        assert set(m.segments) == {0, 1}
        # candidate at y=0.06 is within d_max of both but nearer the first
        m.integrate_scan([seg(1, 0.06, 3, 0.06)], ORIGIN, 1)
        assert m.segments[0].weight == 2
        assert m.segments[1].weight == 1
        m.check_invariants()

    def test_tie_prefers_smaller_index(self):
        # 0.15 is exactly twice 0.075 in binary, so both separations are equal
        m = OneToOneMapper(THRESHOLDS)
        m.integrate_scan([seg(0, 0.0, 4, 0.0), seg(0, 0.15, 4, 0.15)], ORIGIN, 0)
        m.integrate_scan([seg(1, 0.075, 3, 0.075)], ORIGIN, 1)
        assert m.segments[0].weight == 2
        assert m.segments[1].weight == 1

    def test_no_match_opens_new_index(self):
        m = OneToOneMapper(THRESHOLDS)
        m.integrate_scan([seg(0, 0, 2, 0)], ORIGIN, 0)
        m.integrate_scan([seg(0, 5, 2, 5)], ORIGIN, 1)
        assert set(m.segments) == {0, 1}

    def test_bridging_keeps_duplicates(self):
        m = OneToOneMapper(THRESHOLDS)
        for idx, pose, segments in bridging_frames():
            m.integrate_scan(segments, pose, idx)
        # the long view merged into exactly one piece; the other stays
        assert len(m.segments) == 2
        weights = sorted(s.weight for s in m.segments.values())
        assert weights == [1, 2]
        m.check_invariants()

    def test_one_to_many_coalesces_same_input(self):
        m = LineSegmentMapper(THRESHOLDS)
        for idx, pose, segments in bridging_frames():
            m.integrate_scan(segments, pose, idx)
        assert len(m.segments) == 1
        assert m.segments[0].weight == 3


class TestOfflineReplay:
    def test_matches_manual_feeding(self):
        frames = bridging_frames()
        replayed = run_offline_one_to_one(frames, THRESHOLDS)
        manual = OneToOneMapper(THRESHOLDS)
        for idx, pose, segments in frames:
            manual.integrate_scan(segments, pose, idx)
        assert {i: (s.start.x, s.start.y, s.end.x, s.end.y, s.weight)
                for i, s in replayed.segments.items()} == \
               {i: (s.start.x, s.start.y, s.end.x, s.end.y, s.weight)
                for i, s in manual.segments.items()}

    def test_adjust_still_available_math(self):
        # offline replay returns a full mapper; its bookkeeping stays intact
        replayed = run_offline_one_to_one(bridging_frames(), THRESHOLDS)
        replayed.check_invariants()
        assert replayed.total_originals == 3
