"""Flat key=value configuration with typed defaults.

Thresholds are configured in the units the datasets are usually quoted in
(degrees, millimeters) and converted to SI when the typed parameter
objects are built.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Mapping

from .extraction import ExtractionParams
from .fusion import FusionThresholds

DEFAULTS: dict[str, float | int] = {
    "fusion.theta_max_deg": 4.0,
    "fusion.d_max_mm": 100.0,
    "fusion.p_min_mm": -100.0,
    "extraction.min_length_m": 0.6,
    "extraction.min_points": 10,
    "extraction.split_threshold_m": 0.05,
    "extraction.max_point_gap_m": 0.5,
    "mapper.min_updates": 5,
    "mapper.adjust_workers": 0,
    "keyframe.translation_m": 0.2,
    "keyframe.rotation_deg": 10.0,
    "scan.max_range_m": 80.0,
    "eval.resolution_m": 0.01,
    "eval.sigma_m": 0.03,
    "eval.angle_bin_deg": 1.0,
    "eval.lambda": 1.0,
    "eval.superposition_fraction": 0.2,
    "eval.w_dist": 1.0,
    "eval.w_ang": 1.0,
    "render.pixels_per_meter": 20.0,
}


class ConfigError(ValueError):
    """Unknown key or badly typed value."""


class Config:
    """Immutable-ish view over DEFAULTS with overrides applied."""

    def __init__(self, overrides: Mapping[str, float | int | str] | None = None):
        self._values: dict[str, float | int] = dict(DEFAULTS)
        if overrides:
            for key, value in overrides.items():
                self.set(key, value)

    def set(self, key: str, value: float | int | str) -> None:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        default = DEFAULTS[key]
        try:
            if isinstance(default, int):
                parsed: float | int = int(str(value))
            else:
                parsed = float(str(value))
        except ValueError:
            raise ConfigError(f"config key {key!r} expects {type(default).__name__}, got {value!r}")
        if isinstance(parsed, float) and not math.isfinite(parsed):
            raise ConfigError(f"config key {key!r} must be finite, got {value!r}")
        self._values[key] = parsed

    def get(self, key: str) -> float | int:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def items(self) -> list[tuple[str, float | int]]:
        return sorted(self._values.items())

    def echo_lines(self) -> list[str]:
        """Sorted key=value lines for embedding in artifact headers."""
        return [f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}"
                for key, value in self.items()]

    def fusion_thresholds(self) -> FusionThresholds:
        return FusionThresholds(
            theta_max=math.radians(float(self.get("fusion.theta_max_deg"))),
            d_max=float(self.get("fusion.d_max_mm")) / 1000.0,
            p_min=float(self.get("fusion.p_min_mm")) / 1000.0,
        )

    def extraction_params(self) -> ExtractionParams:
        return ExtractionParams(
            min_length=float(self.get("extraction.min_length_m")),
            min_points=int(self.get("extraction.min_points")),
            split_threshold=float(self.get("extraction.split_threshold_m")),
            max_point_gap=float(self.get("extraction.max_point_gap_m")),
        )


def parse_config_lines(lines: Iterable[str]) -> dict[str, str]:
    """Parse `key = value` rows; '#' comments and blank lines are skipped."""
    overrides: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, value = stripped.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def load_config(path: str | Path | None = None,
                overrides: Mapping[str, float | int | str] | None = None) -> Config:
    """Build a config from an optional file plus explicit overrides (which win)."""
    merged: dict[str, float | int | str] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            merged.update(parse_config_lines(fh))
    if overrides:
        merged.update(overrides)
    return Config(merged)
