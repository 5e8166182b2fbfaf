import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from lateralbench.exceptions import ConfigurationError
from trajectory.services.paths import Path

logger = logging.getLogger(__name__)

KMH = 1.0 / 3.6
STRAIGHT_CURVATURE = 0.01
STRAIGHT_MIN_DURATION = 5.0


@dataclass(frozen=True)
class DrivingLimits:
    """Speed (km/h) and acceleration (m/s^2) limits of a trajectory."""

    v_max: float
    a_x_max: float
    a_x_min: float
    a_y_max: float

    def __post_init__(self):
        for name in ("v_max", "a_x_max", "a_x_min", "a_y_max"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"Driving limit {name} must be positive, got {value}")

    @property
    def v_max_ms(self) -> float:
        return self.v_max * KMH


def curvature_speed_limit(path: Path, limits: DrivingLimits) -> np.ndarray:
    curvature = np.abs(path.curvature)
    with np.errstate(divide="ignore"):
        lateral = np.where(curvature > 0, np.sqrt(limits.a_y_max / np.maximum(curvature, 1e-300)), np.inf)
    return np.minimum(limits.v_max_ms, lateral)


def plan_speed_profile(path: Path, limits: DrivingLimits, v_start: float = 0.0,
                       v_end: float = 0.0) -> np.ndarray:
    """Acceleration-limited speed per path point (forward then backward pass)."""
    if len(path) == 0:
        raise ConfigurationError("Cannot plan a speed profile on an empty path")

    speed = curvature_speed_limit(path, limits)
    speed[0] = min(speed[0], max(v_start, 0.0))
    speed[-1] = min(speed[-1], max(v_end, 0.0))
    ds = np.diff(path.s)

    for i in range(len(ds)):
        reachable = np.sqrt(speed[i] ** 2 + 2.0 * limits.a_x_max * ds[i])
        if speed[i + 1] > reachable:
            speed[i + 1] = reachable
    for i in range(len(ds) - 1, -1, -1):
        reachable = np.sqrt(speed[i + 1] ** 2 + 2.0 * limits.a_x_min * ds[i])
        if speed[i] > reachable:
            speed[i] = reachable
    return speed


def travel_times(s: np.ndarray, speed: np.ndarray) -> np.ndarray:
    """Cumulative time per point assuming constant acceleration between points."""
    mean = speed[:-1] + speed[1:]
    with np.errstate(divide="ignore"):
        dt = np.where(mean > 0, 2.0 * np.diff(s) / np.where(mean > 0, mean, 1.0), np.inf)
    return np.concatenate([[0.0], np.cumsum(dt)])


@dataclass(frozen=True, eq=False)
class Trajectory:
    name: str
    path: Path
    speed: np.ndarray
    limits: DrivingLimits
    purpose: str = ""
    usage: str = ""
    times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        speed = np.asarray(self.speed, dtype=float)
        if speed.shape != self.path.s.shape:
            raise ConfigurationError("Speed profile must have one value per path point")
        object.__setattr__(self, "speed", speed)
        object.__setattr__(self, "times", travel_times(self.path.s, speed))

    @classmethod
    def planned(cls, name: str, path: Path, limits: DrivingLimits, **kwargs) -> "Trajectory":
        return cls(name, path, plan_speed_profile(path, limits), limits, **kwargs)

    @property
    def length(self) -> float:
        return self.path.length

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def max_speed(self) -> float:
        return float(np.max(self.speed))

    def speed_at(self, s: float) -> float:
        return float(np.interp(s, self.path.s, self.speed))

    def speed_slope_at(self, s: float) -> float:
        """dv/ds of the planned profile at ``s`` (zero outside the path)."""
        if s < self.path.s[0] or s >= self.path.s[-1]:
            return 0.0
        i = int(np.searchsorted(self.path.s, s, side="right") - 1)
        return float((self.speed[i + 1] - self.speed[i]) / (self.path.s[i + 1] - self.path.s[i]))

    def lateral_accelerations(self) -> np.ndarray:
        return self.speed ** 2 * np.abs(self.path.curvature)

    def longitudinal_accelerations(self) -> np.ndarray:
        return np.diff(self.speed ** 2) / (2.0 * np.diff(self.path.s))


def straight_sections(trajectory: Trajectory, curvature_threshold: float = STRAIGHT_CURVATURE,
                      min_duration: float = STRAIGHT_MIN_DURATION) -> List[Tuple[float, float]]:
    """Maximal runs with |curvature| below threshold lasting longer than ``min_duration``."""
    straight = np.abs(trajectory.path.curvature) < curvature_threshold
    s, times = trajectory.path.s, trajectory.times
    sections: List[Tuple[float, float]] = []

    edges = np.diff(np.concatenate([[0], straight.astype(int), [0]]))
    for first, end in zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)):
        last = end - 1
        if times[last] - times[first] > min_duration:
            sections.append((float(s[first]), float(s[last])))
    return sections
