"""Line segment feature maps from 2D laser scans.

Online one-to-many merging of extracted line segments, multi-worker global
map adjustment against optimized trajectories, one-to-one baselines, and a
correlation-based map quality metric with redundancy penalties.
"""

from .baselines import OneToOneMapper, run_offline_one_to_one
from .config import Config, ConfigError, load_config
from .extraction import ExtractionParams, extract_segments
from .fusion import (
    FusionMeasurements,
    FusionThresholds,
    merge_segments,
    satisfies_fusion_conditions,
)
from .geometry import (
    DegenerateSegmentError,
    GeneralLineForm,
    LineSegment,
    Point,
    Pose2D,
    norm_angle,
    transform_to_global,
)
from .mapper import LineSegmentMapper, MapStatistics, OriginalSegment, map_statistics
from .scan_io import (
    LaserScan,
    MalformedLogError,
    SegmentMap,
    Trajectory,
    parse_carmen_log,
    parse_segment_map,
    parse_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "Config",
    "ConfigError",
    "DegenerateSegmentError",
    "ExtractionParams",
    "FusionMeasurements",
    "FusionThresholds",
    "GeneralLineForm",
    "LaserScan",
    "LineSegment",
    "LineSegmentMapper",
    "MalformedLogError",
    "MapStatistics",
    "OneToOneMapper",
    "OriginalSegment",
    "Point",
    "Pose2D",
    "SegmentMap",
    "Trajectory",
    "extract_segments",
    "load_config",
    "map_statistics",
    "merge_segments",
    "norm_angle",
    "parse_carmen_log",
    "parse_segment_map",
    "parse_trajectory",
    "run_offline_one_to_one",
    "satisfies_fusion_conditions",
    "transform_to_global",
    "__version__",
]
