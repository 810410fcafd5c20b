"""Command-line client for the mapping service.

Every data subcommand talks to the HTTP API: an in-process application
by default, or a remote server via --server. Files stay on the client
side; the service exchanges file content as text fields.

Exit codes: 0 success, 1 usage error, 2 data error. Deterministic output
goes to stdout; runtimes and notices go to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

import httpx

from .config import ConfigError, parse_config_lines


class DataError(Exception):
    """Unusable input: bad files, rejected requests, unreachable server."""


class _Parser(argparse.ArgumentParser):
    # usage mistakes exit 1, data problems exit 2
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _key_value(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {item!r}")
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


class ServiceClient:
    """POSTs JSON payloads to the service and unwraps error details."""

    def __init__(self, server: str | None = None):
        if server is None:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service.app import create_app

            self._client: httpx.Client = TestClient(create_app())
        else:
            self._client = httpx.Client(base_url=server, timeout=httpx.Timeout(600.0))

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise DataError(f"request to {path} failed: {exc}")
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise DataError(f"{path}: {detail}")
        return resp.json()

    def close(self) -> None:
        self._client.close()


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(str(exc))


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(str(exc))


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    """Config file values first, --set flags on top."""
    merged: dict[str, str] = {}
    if getattr(args, "config", None):
        try:
            merged.update(parse_config_lines(_read_text(args.config).splitlines()))
        except ConfigError as exc:
            raise DataError(f"{args.config}: {exc}")
    for key, value in getattr(args, "set", None) or []:
        merged[key] = value
    return merged


def _stats_row(stats: dict) -> str:
    def fmt(value: float | None) -> str:
        return "-" if value is None else f"{value:.3f}"

    return (
        f"count={stats['count']} "
        f"min_mm={fmt(stats['min_length_mm'])} "
        f"max_mm={fmt(stats['max_length_mm'])} "
        f"mean_mm={fmt(stats['mean_length_mm'])}"
    )


# ---- subcommands ------------------------------------------------------


def cmd_merge(args: argparse.Namespace) -> int:
    payload: dict = {
        "log": _read_text(args.log),
        "trajectory": _read_text(args.trajectory),
        "merger": args.merger,
        "adjust_at": args.adjust_at or [],
        "config": _overrides(args),
        "include_correspondences": args.correspondences_out is not None,
    }
    if args.optimized_trajectory is not None:
        payload["optimized_trajectory"] = _read_text(args.optimized_trajectory)
    if args.min_updates is not None:
        payload["min_updates"] = args.min_updates
    client = ServiceClient(args.server)
    try:
        resp = client.post("/jobs/merge", payload)
    finally:
        client.close()
    _write_text(args.out, resp["filtered_map_file"])
    if args.full_map_out is not None:
        _write_text(args.full_map_out, resp["map_file"])
    if args.correspondences_out is not None:
        _write_text(args.correspondences_out, resp["correspondence_file"])
    print(_stats_row(resp["filtered_stats"]))
    timing = resp["timing"]
    adjust = ",".join(f"{s:.3f}" for s in timing["adjust_seconds"]) or "-"
    print(
        f"merge_mean_ms={timing['mean_merge_seconds'] * 1000.0:.3f} "
        f"merge_total_s={timing['total_merge_seconds']:.3f} "
        f"adjust_s={adjust} "
        f"processed={timing['processed']} "
        f"skipped_keyframe={timing['skipped_keyframe']} "
        f"skipped_no_pose={timing['skipped_no_pose']} "
        f"segments_extracted={timing['segments_extracted']}",
        file=sys.stderr,
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    payload: dict = {
        "map_file": _read_text(args.map),
        "log": _read_text(args.log),
        "trajectory": _read_text(args.trajectory),
        "config": _overrides(args),
    }
    if args.correspondences is not None:
        payload["correspondences"] = _read_text(args.correspondences)
    else:
        print(
            "notice: error metric needs a correspondence file (--correspondences); "
            "reporting quality only",
            file=sys.stderr,
        )
    client = ServiceClient(args.server)
    try:
        resp = client.post("/jobs/evaluate", payload)
    finally:
        client.close()
    sys.stdout.write(resp["record"])
    if args.record_out is not None:
        _write_text(args.record_out, resp["record"])
    for warning in resp["warnings"]:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    if (args.log is None) != (args.trajectory is None):
        args.parser.error("--log and --trajectory must be given together")
    payload: dict = {
        "map_file": _read_text(args.map),
        "config": _overrides(args),
    }
    if args.log is not None:
        payload["log"] = _read_text(args.log)
        payload["trajectory"] = _read_text(args.trajectory)
    client = ServiceClient(args.server)
    try:
        resp = client.post("/jobs/render", payload)
    finally:
        client.close()
    _write_text(args.out, resp["svg"])
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    payload = {
        "world_json": _read_text(args.world),
        "seed": args.seed,
        "range_sigma": args.range_sigma,
        "heading_bias_rad_per_m": args.heading_bias,
        "translation_scale": args.translation_scale,
    }
    client = ServiceClient(args.server)
    try:
        resp = client.post("/jobs/synth", payload)
    finally:
        client.close()
    _write_text(args.out_log, resp["log"])
    _write_text(args.out_trajectory, resp["trajectory"])
    if args.out_odometry_trajectory is not None:
        _write_text(args.out_odometry_trajectory, resp["odometry_trajectory"])
    print(f"scans={resp['scan_count']}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    payload = {"map_file": _read_text(args.map)}
    client = ServiceClient(args.server)
    try:
        resp = client.post("/jobs/stats", payload)
    finally:
        client.close()
    print(_stats_row(resp))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


# ---- parser -----------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="linemap", description="Line-segment feature mapping toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def add_common(p: argparse.ArgumentParser, config: bool = True) -> None:
        p.add_argument(
            "--server", metavar="URL", default=None,
            help="remote service URL (default: run in process)",
        )
        if config:
            p.add_argument("--config", metavar="FILE", help="key=value config file")
            p.add_argument(
                "--set", metavar="KEY=VALUE", action="append", type=_key_value,
                help="override one config key (repeatable)",
            )

    m = sub.add_parser("merge", help="replay a log and write the merged segment map")
    m.add_argument("log", help="laser log (CARMEN format)")
    m.add_argument("trajectory", help="poses, one `scan_index x y theta` row per scan")
    m.add_argument("-o", "--out", required=True, metavar="FILE",
                   help="output map (segments under the update threshold culled)")
    m.add_argument("--merger", choices=("cae", "oto", "o2to"), default="cae",
                   help="cae: one-to-many with adjustment; oto: online one-to-one; "
                        "o2to: one-to-one (pass final poses as the trajectory)")
    m.add_argument("--optimized-trajectory", metavar="FILE",
                   help="post-loop-closure poses used by map adjustment")
    m.add_argument("--adjust-at", metavar="SCAN_INDEX", action="append", type=int,
                   help="run map adjustment once this scan index is reached (repeatable)")
    m.add_argument("--min-updates", type=int, metavar="N",
                   help="cull threshold for the output map (default from config)")
    m.add_argument("--full-map-out", metavar="FILE", help="also write the unculled map")
    m.add_argument("--correspondences-out", metavar="FILE",
                   help="write per-segment original correspondences (enables the error metric)")
    add_common(m)
    m.set_defaults(func=cmd_merge, parser=m)

    e = sub.add_parser("evaluate", help="score a map against registered scans")
    e.add_argument("map", help="segment map file")
    e.add_argument("log", help="laser log (CARMEN format)")
    e.add_argument("trajectory", help="poses to register the scans under")
    e.add_argument("--correspondences", metavar="FILE",
                   help="correspondence dump from merge (enables the error metric)")
    e.add_argument("--record-out", metavar="FILE", help="also write the key=value record")
    add_common(e)
    e.set_defaults(func=cmd_evaluate, parser=e)

    r = sub.add_parser("render", help="export a map (optionally over scan points) as SVG")
    r.add_argument("map", help="segment map file")
    r.add_argument("-o", "--out", required=True, metavar="FILE", help="output SVG")
    r.add_argument("--log", metavar="FILE", help="laser log to overlay")
    r.add_argument("--trajectory", metavar="FILE", help="poses for the overlay")
    add_common(r)
    r.set_defaults(func=cmd_render, parser=r)

    s = sub.add_parser("synth", help="generate a log and trajectories from a world spec")
    s.add_argument("world", help="world spec JSON (walls, waypoints, scanner)")
    s.add_argument("--out-log", required=True, metavar="FILE")
    s.add_argument("--out-trajectory", required=True, metavar="FILE",
                   help="exact poses")
    s.add_argument("--out-odometry-trajectory", metavar="FILE",
                   help="drifted odometry poses")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--range-sigma", type=float, default=0.01, metavar="METERS",
                   help="Gaussian range noise (default 0.01)")
    s.add_argument("--heading-bias", type=float, default=0.0, metavar="RAD_PER_M",
                   help="odometry heading drift per meter traveled")
    s.add_argument("--translation-scale", type=float, default=1.0,
                   help="odometry translation scale factor")
    add_common(s, config=False)
    s.set_defaults(func=cmd_synth, parser=s)

    st = sub.add_parser("stats", help="print count and length statistics for a map file")
    st.add_argument("map", help="segment map file")
    add_common(st, config=False)
    st.set_defaults(func=cmd_stats, parser=st)

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.set_defaults(func=cmd_serve, parser=sv)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"linemap: error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
