"""FastAPI application: session-based online mapping plus batch jobs.

Sessions hold a live merger fed scan by scan, mirroring how the merger
embeds into a running SLAM frontend. Batch endpoints replay whole files
in one call and return whole files; clients own the filesystem.
"""

from __future__ import annotations

import math
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..baselines import OneToOneMapper
from ..config import Config, ConfigError
from ..extraction import extract_segments
from ..geometry import LineSegment, Point, Pose2D
from ..mapper import (
    LineSegmentMapper,
    dump_correspondences,
    map_statistics,
    parse_correspondences,
)
from ..pipeline import run_evaluation, run_merge
from ..scan_io import (
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
)
from ..synth import NoiseParams, WorldSpec, generate
from . import models
from ..evaluation import registered_points
from ..mapper import MapStatistics


@dataclass
class Session:
    session_id: str
    merger_name: str
    config: Config
    mapper: LineSegmentMapper
    scans_integrated: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


def _stats_model(stats: MapStatistics) -> models.StatsModel:
    def mm(v: float | None) -> float | None:
        return None if v is None else v * 1000.0

    return models.StatsModel(
        count=stats.count,
        min_length_m=stats.min_length,
        max_length_m=stats.max_length,
        mean_length_m=stats.mean_length,
        min_length_mm=mm(stats.min_length),
        max_length_mm=mm(stats.max_length),
        mean_length_mm=mm(stats.mean_length),
    )


def _segment_models(smap: SegmentMap) -> list[models.SegmentModel]:
    return [
        models.SegmentModel(
            x1=seg.start.x, y1=seg.start.y, x2=seg.end.x, y2=seg.end.y,
            weight=seg.weight, index=idx,
        )
        for idx, seg in smap.ordered()
    ]


def _config_or_400(overrides: dict) -> Config:
    try:
        return Config(overrides)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="linemap", version=__version__)
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    @app.get("/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=__version__)

    # ---- sessions ----------------------------------------------------

    @app.post("/sessions", response_model=models.SessionInfo)
    def create_session(req: models.CreateSessionRequest) -> models.SessionInfo:
        if req.merger not in ("cae", "oto"):
            raise HTTPException(status_code=400, detail=f"unknown merger {req.merger!r}")
        config = _config_or_400(req.config)
        thresholds = config.fusion_thresholds()
        mapper: LineSegmentMapper
        mapper = LineSegmentMapper(thresholds) if req.merger == "cae" else OneToOneMapper(thresholds)
        session = Session(
            session_id=uuid.uuid4().hex,
            merger_name=req.merger,
            config=config,
            mapper=mapper,
        )
        with registry_lock:
            sessions[session.session_id] = session
        return models.SessionInfo(
            session_id=session.session_id, merger=req.merger,
            scans_integrated=0, map_size=0,
        )

    def _session_or_404(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return session

    @app.get("/sessions", response_model=list[models.SessionInfo])
    def list_sessions() -> list[models.SessionInfo]:
        with registry_lock:
            current = list(sessions.values())
        return [
            models.SessionInfo(
                session_id=s.session_id, merger=s.merger_name,
                scans_integrated=s.scans_integrated, map_size=len(s.mapper.segments),
            )
            for s in current
        ]

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        with registry_lock:
            if session_id not in sessions:
                raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
            del sessions[session_id]
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/scans", response_model=models.FeedScanResponse)
    def feed_scan(session_id: str, req: models.FeedScanRequest) -> models.FeedScanResponse:
        session = _session_or_404(session_id)
        pose = Pose2D(req.pose.x, req.pose.y, req.pose.theta)
        if req.segments is not None:
            try:
                segments = [
                    LineSegment(Point(s.x1, s.y1), Point(s.x2, s.y2)) for s in req.segments
                ]
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        elif req.ranges is not None:
            try:
                scan = LaserScan(
                    scan_index=req.scan_index,
                    ranges=tuple(req.ranges),
                    angle_min=req.angle_min if req.angle_min is not None else -math.pi / 2,
                    angle_increment=(
                        req.angle_increment
                        if req.angle_increment is not None
                        else math.pi / (len(req.ranges) - 1)
                    ),
                    max_range=req.max_range
                    if req.max_range is not None
                    else float(session.config.get("scan.max_range_m")),
                )
            except (ValueError, ZeroDivisionError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            segments = extract_segments(scan, session.config.extraction_params())
        else:
            raise HTTPException(status_code=400, detail="provide either segments or ranges")
        with session.lock:
            t0 = time.perf_counter()
            session.mapper.integrate_scan(segments, pose, req.scan_index)
            elapsed = time.perf_counter() - t0
            session.scans_integrated += 1
            size = len(session.mapper.segments)
        return models.FeedScanResponse(
            scan_index=req.scan_index, segments_in=len(segments),
            map_size=size, merge_seconds=elapsed,
        )

    @app.post("/sessions/{session_id}/adjust", response_model=models.AdjustResponse)
    def adjust_session(session_id: str, req: models.AdjustRequest) -> models.AdjustResponse:
        session = _session_or_404(session_id)
        if session.merger_name != "cae":
            raise HTTPException(status_code=400, detail="one-to-one sessions cannot adjust")
        try:
            trajectory = Trajectory.from_pairs(
                (tp.scan_index, Pose2D(tp.pose.x, tp.pose.y, tp.pose.theta))
                for tp in req.trajectory
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        workers = req.workers if req.workers is not None else int(
            session.config.get("mapper.adjust_workers")
        )
        with session.lock:
            t0 = time.perf_counter()
            try:
                suspicious = session.mapper.adjustment_diagnostics(trajectory)
                session.mapper.adjust(trajectory, workers=workers)
            except KeyError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            elapsed = time.perf_counter() - t0
            size = len(session.mapper.segments)
        return models.AdjustResponse(
            map_size=size, adjust_seconds=elapsed, suspicious_indices=suspicious
        )

    @app.get("/sessions/{session_id}/map", response_model=models.MapResponse)
    def session_map(session_id: str, min_updates: int | None = None) -> models.MapResponse:
        session = _session_or_404(session_id)
        with session.lock:
            if min_updates is None:
                smap = session.mapper.snapshot()
            else:
                smap = session.mapper.filter_by_weight(min_updates)
            last_index = session.mapper.last_index
            total = session.mapper.total_originals
        return models.MapResponse(
            segments=_segment_models(smap),
            map_file=dump_segment_map(smap),
            last_index=last_index,
            total_originals=total,
        )

    @app.get("/sessions/{session_id}/statistics", response_model=models.StatsModel)
    def session_statistics(session_id: str) -> models.StatsModel:
        session = _session_or_404(session_id)
        with session.lock:
            stats = session.mapper.statistics()
        return _stats_model(stats)

    # ---- batch jobs ---------------------------------------------------

    @app.post("/jobs/merge", response_model=models.MergeResponse)
    def merge_job(req: models.MergeRequest) -> models.MergeResponse:
        config = _config_or_400(req.config)
        try:
            scans = parse_carmen_log(
                req.log.splitlines(), max_range=float(config.get("scan.max_range_m"))
            )
            trajectory = parse_trajectory(req.trajectory.splitlines())
            optimized = (
                parse_trajectory(req.optimized_trajectory.splitlines())
                if req.optimized_trajectory is not None
                else None
            )
        except MalformedLogError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            result = run_merge(
                scans,
                trajectory,
                config,
                merger=req.merger,
                optimized_trajectory=optimized,
                adjust_at=req.adjust_at,
            )
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        metadata = {"merger": req.merger}
        for line in config.echo_lines():
            key, value = line.split("=", 1)
            metadata[f"config.{key}"] = value
        min_updates = (
            req.min_updates if req.min_updates is not None
            else int(config.get("mapper.min_updates"))
        )
        full = result.mapper.snapshot(metadata)
        filtered_meta = dict(metadata)
        filtered_meta["min_updates"] = str(min_updates)
        filtered = result.mapper.filter_by_weight(min_updates, filtered_meta)
        timing = models.TimingModel(
            processed=result.processed,
            skipped_no_pose=result.skipped_no_pose,
            skipped_keyframe=result.skipped_keyframe,
            segments_extracted=result.segments_extracted,
            mean_merge_seconds=result.mean_merge_seconds,
            total_merge_seconds=result.total_merge_seconds,
            adjust_seconds=result.adjust_seconds,
        )
        return models.MergeResponse(
            map_file=dump_segment_map(full),
            filtered_map_file=dump_segment_map(filtered),
            correspondence_file=(
                dump_correspondences(result.mapper) if req.include_correspondences else None
            ),
            stats=_stats_model(map_statistics(full)),
            filtered_stats=_stats_model(map_statistics(filtered)),
            timing=timing,
        )

    @app.post("/jobs/evaluate", response_model=models.EvaluateResponse)
    def evaluate_job(req: models.EvaluateRequest) -> models.EvaluateResponse:
        config = _config_or_400(req.config)
        try:
            smap = parse_segment_map(req.map_file.splitlines())
            scans = parse_carmen_log(
                req.log.splitlines(), max_range=float(config.get("scan.max_range_m"))
            )
            trajectory = parse_trajectory(req.trajectory.splitlines())
            correspondences = (
                parse_correspondences(req.correspondences.splitlines())
                if req.correspondences is not None
                else None
            )
        except MalformedLogError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            result = run_evaluation(smap, scans, trajectory, config, correspondences)
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        record_lines = [f"config.{line}" for line in config.echo_lines()]
        record_lines.extend(result.record_lines())
        return models.EvaluateResponse(
            record="\n".join(record_lines) + "\n",
            q=result.quality.q,
            normalized_percent=result.quality.normalized_percent,
            total_pixels=result.quality.total_pixels,
            redundant_pixels=result.quality.redundant_pixels,
            redundant_pairs=[(a, b) for a, b in result.quality.pairs],
            error_e=result.error.e if result.error else None,
            distance=result.distance,
            warnings=result.warnings,
        )

    @app.post("/jobs/render", response_model=models.RenderResponse)
    def render_job(req: models.RenderRequest) -> models.RenderResponse:
        config = _config_or_400(req.config)
        try:
            smap = parse_segment_map(req.map_file.splitlines())
            points = None
            if req.log is not None and req.trajectory is not None:
                scans = parse_carmen_log(
                    req.log.splitlines(), max_range=float(config.get("scan.max_range_m"))
                )
                trajectory = parse_trajectory(req.trajectory.splitlines())
                posed = [s for s in scans if s.scan_index in trajectory]
                points = [tuple(p) for p in registered_points(posed, trajectory)]
        except MalformedLogError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        svg = export_svg(
            smap,
            scan_points=points,
            pixels_per_meter=float(config.get("render.pixels_per_meter")),
            header_lines=[f"config.{line}" for line in config.echo_lines()],
        )
        return models.RenderResponse(svg=svg)

    @app.post("/jobs/synth", response_model=models.SynthResponse)
    def synth_job(req: models.WorldModel) -> models.SynthResponse:
        try:
            spec = WorldSpec.from_json(req.world_json)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"bad world spec: {exc}")
        noise = NoiseParams(
            range_sigma=req.range_sigma,
            heading_bias_rad_per_m=req.heading_bias_rad_per_m,
            translation_scale=req.translation_scale,
        )
        result = generate(spec, noise=noise, seed=req.seed)
        return models.SynthResponse(
            log=dump_carmen_log(result.scans),
            trajectory=dump_trajectory(result.exact_trajectory),
            odometry_trajectory=dump_trajectory(result.odometry_trajectory),
            scan_count=len(result.scans),
        )

    @app.post("/jobs/stats", response_model=models.StatsModel)
    def stats_job(req: models.StatsRequest) -> models.StatsModel:
        try:
            smap = parse_segment_map(req.map_file.splitlines())
        except MalformedLogError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _stats_model(map_statistics(smap))

    return app


app = create_app()
