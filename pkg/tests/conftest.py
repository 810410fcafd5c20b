"""Shared fixtures: synthetic worlds and pre-generated scan sets.

The loop world is a rectangular room with a thin spike on the bottom wall.
Seen from the near leg of the loop the spike shadows a stretch of wall, so
extraction yields two disjoint wall pieces; seen from the far leg the spike
is narrower than the beam spacing and the wall comes back as one bridging
run. That geometry forces one-to-many coalescing events deterministically,
which several tests rely on.
"""

from __future__ import annotations

import pytest

from linemap.config import Config
from linemap.scan_io import dump_carmen_log, dump_trajectory
from linemap.synth import NoiseParams, WorldSpec, generate

SPIKE_WALLS = [
    (0.0, 0.0, 16.0, 0.0),
    (16.0, 0.0, 16.0, 12.0),
    (16.0, 12.0, 0.0, 12.0),
    (0.0, 12.0, 0.0, 0.0),
    (7.0, 0.0, 7.0, 1.25),
    (7.0, 1.25, 7.02, 1.25),
    (7.02, 1.25, 7.02, 0.0),
]
SPIKE_WAYPOINTS = [(1.5, 1.7), (14.5, 1.7), (14.5, 10.3), (1.5, 10.3), (1.5, 1.7)]


def spike_world(step: float = 0.15, loops: int = 2) -> WorldSpec:
    return WorldSpec(
        walls=list(SPIKE_WALLS),
        waypoints=list(SPIKE_WAYPOINTS),
        beams=181,
        fov_deg=180.0,
        step=step,
        loops=loops,
    )


@pytest.fixture(scope="session")
def config() -> Config:
    return Config()


@pytest.fixture(scope="session")
def loop_synth():
    """Two noisy laps with mild systematic heading drift in the odometry."""
    noise = NoiseParams(range_sigma=0.01, heading_bias_rad_per_m=5e-5)
    return generate(spike_world(), noise, seed=7)


@pytest.fixture(scope="session")
def loop_lap_boundary(loop_synth) -> int:
    """Scan index right after the first lap closes."""
    return loop_synth.scans[len(loop_synth.scans) // 2].scan_index


@pytest.fixture(scope="session")
def small_log_text(loop_synth) -> str:
    return dump_carmen_log(loop_synth.scans[:80])


@pytest.fixture(scope="session")
def small_traj_text(loop_synth) -> str:
    return dump_trajectory(loop_synth.exact_trajectory)
