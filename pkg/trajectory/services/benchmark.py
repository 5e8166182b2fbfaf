"""
The six benchmark trajectories.

Geometries are compositions of straights and clothoid-arc-clothoid curves
whose total length matches the reference lengths; the last straight takes
whatever length remains.
"""

import logging
import math
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from lateralbench.exceptions import ConfigurationError
from trajectory.services.paths import Arc, Clothoid, Segment, Straight, build_path
from trajectory.services.speed_profile import DrivingLimits, Trajectory

logger = logging.getLogger(__name__)


def curve(radius: float, angle: float, transition: float) -> List[Segment]:
    """Clothoid-arc-clothoid turn of total heading change ``angle``."""
    kappa = math.copysign(1.0 / radius, angle)
    if not abs(angle) > transition / radius:
        raise ConfigurationError(f"Transition {transition} m too long for a {radius} m radius turn")
    arc_angle = angle - math.copysign(transition / radius, angle)
    return [Clothoid(0.0, kappa, transition), Arc(radius, arc_angle), Clothoid(kappa, 0.0, transition)]


def _compose(parts: Sequence, target_length: float) -> List[Segment]:
    segments: List[Segment] = []
    for part in parts:
        if isinstance(part, (int, float)):
            segments.append(Straight(float(part)))
        else:
            segments.extend(curve(*part))
    remainder = target_length - sum(seg.arclength for seg in segments)
    if remainder <= 0:
        raise ConfigurationError(f"Segments exceed the target length {target_length} m")
    segments.append(Straight(remainder))
    return segments


PI = math.pi

# name: (limits, length, purpose, usage, parts); numbers are straights, tuples are curves
SUITE: Dict[str, Tuple[DrivingLimits, float, str, str, tuple]] = {
    "T1": (DrivingLimits(35, 0.4, 0.7, 1.0), 471.0, "Quite", "O/T",
           (170, (30, PI / 2, 10), 15, (30, PI / 2, 10), 15, (30, -PI / 2, 10), 15, (30, -PI / 2, 10))),
    "T2": (DrivingLimits(71, 1.0, 2.0, 2.0), 1391.8, "Moderate", "T",
           (270, (60, PI / 2, 20), 180, (120, -PI / 3, 20), 200, (60, -PI / 2, 20), 150, (120, PI / 3, 20))),
    "T3": (DrivingLimits(66, 2.2, 3.0, 4.0), 354.3, "Aggressive-medium speed", "T",
           (120, (25, PI / 2, 8), 8, (40, -PI / 3, 8), 8, (25, -PI / 2, 8), 8, (40, PI / 3, 8))),
    "T4": (DrivingLimits(120, 2.5, 3.5, 4.0), 500.0, "High speed", "T",
           (280, (150, 0.1 + 20 / 150, 15), (150, -(0.1 + 20 / 150), 15),
            (150, 0.1 + 20 / 150, 15), (150, -(0.1 + 20 / 150), 15))),
    "T5": (DrivingLimits(100, 1.5, 2.0, 4.0), 2119.6, "Aggressive-high speed", "O",
           (360, (100, PI / 2, 30), 250, (60, -2 * PI / 3, 30), 300, (100, PI / 2, 30), 250, (150, -PI / 3, 30))),
    "T6": (DrivingLimits(70, 2.0, 2.0, 2.0), 1959.3, "Moderate", "O",
           (200, (80, PI / 2, 25), 220, (150, -PI / 2, 25), 250, (50, PI / 2, 25), 220, (150, -PI / 3, 25),
            150, (80, -PI / 2, 25))),
}


def benchmark_segments(name: str) -> List[Segment]:
    try:
        _, length, _, _, parts = SUITE[name]
    except KeyError:
        raise ConfigurationError(f"Unknown benchmark trajectory {name!r}; choose from {', '.join(SUITE)}")
    return _compose(parts, length)


@lru_cache(maxsize=32)
def benchmark_trajectory(name: str, ds: float = 0.5) -> Trajectory:
    segments = benchmark_segments(name)
    limits, _, purpose, usage, _ = SUITE[name]
    path = build_path(segments, ds)
    trajectory = Trajectory.planned(name, path, limits, purpose=purpose, usage=usage)
    logger.debug(f"{name}: {trajectory.length:.1f} m, {trajectory.duration:.1f} s, "
                 f"max {trajectory.max_speed * 3.6:.1f} km/h")
    return trajectory


def benchmark_suite(ds: float = 0.5) -> List[Trajectory]:
    return [benchmark_trajectory(name, ds) for name in SUITE]
