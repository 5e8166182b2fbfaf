"""
Paths built from straights, circular arcs and clothoids.

Curvature is linear in arclength within each segment, so heading has a
closed form and only the position needs numerical quadrature (composite
Simpson between consecutive knots).
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from lateralbench.exceptions import ConfigurationError, PathConstructionError

logger = logging.getLogger(__name__)

HEADING_TOLERANCE = 1e-6
SIMPSON_INTERVALS = 8


@dataclass(frozen=True)
class Straight:
    length: float
    heading: Optional[float] = None

    @property
    def curvatures(self) -> Tuple[float, float]:
        return 0.0, 0.0

    @property
    def arclength(self) -> float:
        return self.length


@dataclass(frozen=True)
class Arc:
    radius: float
    angle: float
    heading: Optional[float] = None

    @property
    def curvatures(self) -> Tuple[float, float]:
        kappa = math.copysign(1.0 / abs(self.radius), self.radius * self.angle)
        return kappa, kappa

    @property
    def arclength(self) -> float:
        return abs(self.radius * self.angle)


@dataclass(frozen=True)
class Clothoid:
    kappa_start: float
    kappa_end: float
    length: float
    heading: Optional[float] = None

    @property
    def curvatures(self) -> Tuple[float, float]:
        return self.kappa_start, self.kappa_end

    @property
    def arclength(self) -> float:
        return self.length


Segment = Union[Straight, Arc, Clothoid]


class PathPoint(NamedTuple):
    s: float
    x: float
    y: float
    heading: float
    curvature: float


@dataclass(frozen=True, eq=False)
class Path:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    curvature: np.ndarray

    def __len__(self) -> int:
        return int(self.s.size)

    def __iter__(self) -> Iterator[PathPoint]:
        for i in range(len(self)):
            yield self.point(i)

    def point(self, index: int) -> PathPoint:
        return PathPoint(
            float(self.s[index]), float(self.x[index]), float(self.y[index]),
            float(self.heading[index]), float(self.curvature[index]),
        )

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def curvature_at(self, s) -> np.ndarray:
        return np.interp(s, self.s, self.curvature)

    def heading_at(self, s) -> np.ndarray:
        return np.interp(s, self.s, self.heading)


def _validate(segments: Sequence[Segment]):
    if not segments:
        raise ConfigurationError("A path needs at least one segment")
    for index, segment in enumerate(segments):
        if isinstance(segment, Arc) and segment.radius == 0:
            raise ConfigurationError(f"Segment {index}: arc radius must be nonzero")
        values = [segment.arclength, *segment.curvatures]
        if not all(math.isfinite(v) for v in values):
            raise ConfigurationError(f"Segment {index}: parameters must be finite")
        if not segment.arclength > 0:
            raise ConfigurationError(f"Segment {index}: length must be positive")


def build_path(segments: Sequence[Segment], ds: float = 0.5,
               start: Tuple[float, float, float] = (0.0, 0.0, 0.0)) -> Path:
    """Sample a G1 chain of segments every ``ds`` metres (last point at the path end)."""
    if not ds > 0:
        raise ConfigurationError(f"Sampling step must be positive, got {ds}")
    _validate(segments)

    x0, y0, heading0 = start
    lengths = np.array([seg.arclength for seg in segments])
    starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    kappa0 = np.array([seg.curvatures[0] for seg in segments])
    kappa1 = np.array([seg.curvatures[1] for seg in segments])
    total = float(starts[-1] + lengths[-1])

    heading_start = np.empty(len(segments))
    heading = heading0
    for index, segment in enumerate(segments):
        if segment.heading is not None and abs(segment.heading - heading) > HEADING_TOLERANCE:
            raise PathConstructionError(
                f"Segment {index} starts at heading {segment.heading:.6f} rad, "
                f"previous segment ends at {heading:.6f} rad"
            )
        heading_start[index] = heading
        heading += 0.5 * (kappa0[index] + kappa1[index]) * lengths[index]

    def locate(s):
        return np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(segments) - 1)

    def heading_at(s):
        k = locate(s)
        tau = s - starts[k]
        slope = (kappa1[k] - kappa0[k]) / lengths[k]
        return heading_start[k] + kappa0[k] * tau + 0.5 * slope * tau ** 2

    def curvature_at(s):
        k = locate(s)
        return kappa0[k] + (kappa1[k] - kappa0[k]) * (s - starts[k]) / lengths[k]

    samples = np.arange(0.0, total, ds)
    if total - samples[-1] > 1e-9 * max(1.0, total):
        samples = np.append(samples, total)
    else:
        samples[-1] = total
    knots = np.union1d(samples, np.append(starts, total))

    # Simpson quadrature of (cos, sin)(heading) over every knot interval
    h = np.diff(knots) / SIMPSON_INTERVALS
    nodes = knots[:-1, None] + h[:, None] * np.arange(SIMPSON_INTERVALS + 1)[None, :]
    weights = np.ones(SIMPSON_INTERVALS + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    theta = heading_at(nodes)
    dx = (np.cos(theta) @ weights) * h / 3.0
    dy = (np.sin(theta) @ weights) * h / 3.0
    knot_x = x0 + np.concatenate([[0.0], np.cumsum(dx)])
    knot_y = y0 + np.concatenate([[0.0], np.cumsum(dy)])

    keep = np.searchsorted(knots, samples)
    path = Path(
        s=samples,
        x=knot_x[keep],
        y=knot_y[keep],
        heading=heading_at(samples),
        curvature=curvature_at(samples),
    )
    logger.debug(f"Built path of {len(segments)} segments, {total:.1f} m, {len(path)} points")
    return path


def mirror_segments(segments: Sequence[Segment]) -> List[Segment]:
    """Reflect a segment chain about its initial heading axis."""
    mirrored: List[Segment] = []
    for segment in segments:
        heading = None if segment.heading is None else -segment.heading
        if isinstance(segment, Straight):
            mirrored.append(Straight(segment.length, heading))
        elif isinstance(segment, Arc):
            mirrored.append(Arc(segment.radius, -segment.angle, heading))
        else:
            mirrored.append(Clothoid(-segment.kappa_start, -segment.kappa_end, segment.length, heading))
    return mirrored
