"""Request/response schemas for the mapping service.

Batch endpoints exchange whole files as text fields (the server never
touches the filesystem); session endpoints exchange structured segments
and poses.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class PoseModel(BaseModel):
    x: float
    y: float
    theta: float


class SegmentModel(BaseModel):
    x1: float
    y1: float
    x2: float
    y2: float
    weight: int = 1
    index: int | None = None


class TrajectoryPointModel(BaseModel):
    scan_index: int
    pose: PoseModel


class HealthResponse(BaseModel):
    status: str
    version: str


class CreateSessionRequest(BaseModel):
    merger: str = "cae"
    config: dict[str, float | int | str] = Field(default_factory=dict)


class SessionInfo(BaseModel):
    session_id: str
    merger: str
    scans_integrated: int
    map_size: int


class FeedScanRequest(BaseModel):
    scan_index: int
    pose: PoseModel
    # either pre-extracted segments (local frame) or raw ranges
    segments: list[SegmentModel] | None = None
    ranges: list[float] | None = None
    angle_min: float | None = None
    angle_increment: float | None = None
    max_range: float | None = None


class FeedScanResponse(BaseModel):
    scan_index: int
    segments_in: int
    map_size: int
    merge_seconds: float


class AdjustRequest(BaseModel):
    trajectory: list[TrajectoryPointModel]
    workers: int | None = None


class AdjustResponse(BaseModel):
    map_size: int
    adjust_seconds: float
    suspicious_indices: list[int] = Field(default_factory=list)


class MapResponse(BaseModel):
    segments: list[SegmentModel]
    map_file: str
    last_index: int
    total_originals: int


class StatsModel(BaseModel):
    count: int
    min_length_m: float | None
    max_length_m: float | None
    mean_length_m: float | None
    min_length_mm: float | None
    max_length_mm: float | None
    mean_length_mm: float | None


class MergeRequest(BaseModel):
    log: str
    trajectory: str
    merger: str = "cae"
    optimized_trajectory: str | None = None
    adjust_at: list[int] = Field(default_factory=list)
    config: dict[str, float | int | str] = Field(default_factory=dict)
    min_updates: int | None = None  # overrides mapper.min_updates when set
    include_correspondences: bool = False


class TimingModel(BaseModel):
    processed: int
    skipped_no_pose: int
    skipped_keyframe: int
    segments_extracted: int
    mean_merge_seconds: float
    total_merge_seconds: float
    adjust_seconds: list[float]


class MergeResponse(BaseModel):
    map_file: str
    filtered_map_file: str
    correspondence_file: str | None
    stats: StatsModel
    filtered_stats: StatsModel
    timing: TimingModel


class EvaluateRequest(BaseModel):
    map_file: str
    log: str
    trajectory: str
    correspondences: str | None = None
    config: dict[str, float | int | str] = Field(default_factory=dict)


class EvaluateResponse(BaseModel):
    record: str  # deterministic key=value lines
    q: float
    normalized_percent: float
    total_pixels: int
    redundant_pixels: int
    redundant_pairs: list[tuple[int, int]]
    error_e: float | None
    distance: float | None
    warnings: list[str]


class RenderRequest(BaseModel):
    map_file: str
    log: str | None = None
    trajectory: str | None = None
    config: dict[str, float | int | str] = Field(default_factory=dict)


class RenderResponse(BaseModel):
    svg: str


class WorldModel(BaseModel):
    world_json: str
    seed: int = 0
    range_sigma: float = 0.0
    heading_bias_rad_per_m: float = 0.0
    translation_scale: float = 1.0


class SynthResponse(BaseModel):
    log: str
    trajectory: str
    odometry_trajectory: str
    scan_count: int


class StatsRequest(BaseModel):
    map_file: str


class ErrorDetail(BaseModel):
    detail: str
