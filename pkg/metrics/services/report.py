import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path as FilePath
from typing import Any, Dict, Iterable, Optional, Union

import pandas as pd

from controllers.services.runner import SimLog
from metrics.services.spectral import m_epsilon, m_zeta, straight_segments
from metrics.services.tracking import iae, iae_raw, mle
from trajectory.services.speed_profile import Trajectory, straight_sections

logger = logging.getLogger(__name__)

# Table column order
METRIC_COLUMNS = ["iae", "mle", "m_epsilon", "m_zeta"]


@dataclass(frozen=True)
class MetricsReport:
    """The four indicators of one run. Spectral indicators are None when not applicable."""

    iae: float
    iae_raw: float
    mle: float
    m_epsilon: Optional[float]
    m_zeta: Optional[float]
    diverged: bool = False
    status: str = "completed"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def objective(self, name: str) -> float:
        """Value for comparisons; divergence and absent indicators count as infinitely bad."""
        value = getattr(self, name)
        if self.diverged or value is None:
            return math.inf
        return float(value)

    def write_json(self, target: Union[str, FilePath], provenance: Optional[Dict[str, Any]] = None) -> FilePath:
        target = FilePath(target)
        target.parent.mkdir(parents=True, exist_ok=True)
        payload = self.to_dict()
        if provenance is not None:
            payload["provenance"] = provenance
        target.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return target

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsReport":
        return cls(**{key: data[key] for key in cls.__dataclass_fields__ if key in data})


def evaluate_log(log: SimLog, trajectory: Trajectory) -> MetricsReport:
    if len(log) == 0:
        logger.warning(f"Empty log for {log.controller} on {log.trajectory}")
        return MetricsReport(math.inf, math.inf, math.inf, None, None, True, log.status)

    e_y = log.column("e_y")
    u_fb = log.column("u_fb")
    dt = log.control_period
    f_s = 1.0 / dt
    segments = straight_segments(log.column("s"), straight_sections(trajectory))

    report = MetricsReport(
        iae=iae(e_y, dt),
        iae_raw=iae_raw(e_y, dt),
        mle=mle(e_y),
        m_epsilon=m_epsilon(u_fb, segments, f_s),
        m_zeta=m_zeta(u_fb, f_s),
        diverged=not log.completed,
        status=log.status,
    )
    if report.m_epsilon is None:
        logger.info(f"{log.controller} on {log.trajectory}: no straight section long enough for M_epsilon")
    return report


def reports_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    """One row per run: identifying columns followed by the metric columns."""
    frame = pd.DataFrame(list(rows))
    leading = [column for column in frame.columns if column not in METRIC_COLUMNS]
    return frame[leading + [column for column in METRIC_COLUMNS if column in frame.columns]]
