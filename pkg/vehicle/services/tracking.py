"""
Closest-point projection and preview-point lateral deviation.

Sign conventions: ``y_1`` is positive when the path lies to the left of the
vehicle axis at the preview point; ``e_y`` (closest point) is positive when
the vehicle lies to the left of the path; ``e_psi`` is vehicle heading minus
path heading, wrapped to (-pi, pi].
"""

import logging
import math
from typing import NamedTuple, Optional

import numpy as np

from lateralbench.exceptions import ConfigurationError, EndOfPathError
from trajectory.services.paths import Path

logger = logging.getLogger(__name__)

WINDOW_BEHIND = 20
WINDOW_AHEAD = 200


def wrap_angle(angle: float) -> float:
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


class Projection(NamedTuple):
    index: int
    fraction: float
    s: float
    x: float
    y: float
    heading: float
    curvature: float


class TrackingErrors(NamedTuple):
    y_1: float
    e_psi: float
    e_y: float
    s: float
    kappa_preview: float
    kappa: float


class PathTracker:
    """Projects positions onto a path, searching near the previous match."""

    def __init__(self, path: Path):
        if len(path) < 2:
            raise ConfigurationError("Tracking needs a path with at least two points")
        self.path = path
        self.hint: Optional[int] = None
        self._dx = np.diff(path.x)
        self._dy = np.diff(path.y)
        self._len2 = self._dx ** 2 + self._dy ** 2

    def reset(self):
        self.hint = None

    def project(self, x: float, y: float) -> Projection:
        path = self.path
        n_segments = len(path) - 1
        if self.hint is None:
            lo, hi = 0, n_segments
        else:
            lo = max(0, self.hint - WINDOW_BEHIND)
            hi = min(n_segments, self.hint + WINDOW_AHEAD)

        wx = x - path.x[lo:hi]
        wy = y - path.y[lo:hi]
        raw = (wx * self._dx[lo:hi] + wy * self._dy[lo:hi]) / self._len2[lo:hi]
        t = np.clip(raw, 0.0, 1.0)
        dist2 = (wx - t * self._dx[lo:hi]) ** 2 + (wy - t * self._dy[lo:hi]) ** 2
        best = int(np.argmin(dist2))
        index = lo + best

        if index == n_segments - 1 and raw[best] > 1.0 + 1e-9:
            raise EndOfPathError(f"Position ({x:.2f}, {y:.2f}) lies beyond the path end")

        self.hint = index
        fraction = float(t[best])
        s = path.s[index] + fraction * (path.s[index + 1] - path.s[index])
        heading = path.heading[index] + fraction * (path.heading[index + 1] - path.heading[index])
        curvature = path.curvature[index] + fraction * (path.curvature[index + 1] - path.curvature[index])
        return Projection(
            index, fraction, float(s),
            float(path.x[index] + fraction * self._dx[index]),
            float(path.y[index] + fraction * self._dy[index]),
            float(heading), float(curvature),
        )

    def point_at(self, s: float):
        """(x, y, curvature) at arclength ``s``, extended straight beyond the end."""
        path = self.path
        if s <= path.length:
            return (
                float(np.interp(s, path.s, path.x)),
                float(np.interp(s, path.s, path.y)),
                float(np.interp(s, path.s, path.curvature)),
            )
        overshoot = s - path.length
        heading = path.heading[-1]
        return (
            float(path.x[-1] + overshoot * math.cos(heading)),
            float(path.y[-1] + overshoot * math.sin(heading)),
            0.0,
        )


def tracking_errors(state, path: Path, preview_distance: float,
                    tracker: Optional[PathTracker] = None) -> TrackingErrors:
    if preview_distance < 0:
        raise ConfigurationError(f"Preview distance must be nonnegative, got {preview_distance}")
    tracker = tracker or PathTracker(path)

    x, y, heading = float(state[0]), float(state[1]), float(state[2])
    closest = tracker.project(x, y)

    e_y = -math.sin(closest.heading) * (x - closest.x) + math.cos(closest.heading) * (y - closest.y)
    e_psi = wrap_angle(heading - closest.heading)

    px, py, kappa_preview = tracker.point_at(closest.s + preview_distance)
    y_1 = -math.sin(heading) * (px - x) + math.cos(heading) * (py - y)
    return TrackingErrors(y_1, e_psi, e_y, closest.s, kappa_preview, closest.curvature)
