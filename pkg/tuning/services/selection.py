"""
Choice of three setups from a robustness-annotated archive.

Setup 1 is the smoothest (lowest M_epsilon) of the most accurate group,
setup 3 the smoothest of the least accurate group. Setup 2 is the point
whose objective vector is angularly closest to the bisector of setups 1 and
3, among the points with IAE between theirs. Objectives are divided by the
work-zone limits before any angle is measured.
"""

import logging
from typing import List, NamedTuple, Optional

import numpy as np

from lateralbench.exceptions import SelectionError
from tuning.services.archive import WORK_ZONE, ArchiveEntry, ParetoArchive, WorkZone, workzone_filter

logger = logging.getLogger(__name__)

MIN_ROBUSTNESS = 90.0
MAX_GROUP = 5


class Selection(NamedTuple):
    setup1: ArchiveEntry
    setup2: ArchiveEntry
    setup3: ArchiveEntry


def selectable(archive: ParetoArchive, min_robustness: Optional[float] = MIN_ROBUSTNESS,
               limits: WorkZone = WORK_ZONE) -> List[ArchiveEntry]:
    candidates = workzone_filter(archive, limits)
    if min_robustness is None:
        return candidates.entries
    return [entry for entry in candidates
            if entry.robustness is not None and entry.robustness >= min_robustness]


def group_size(n: int) -> int:
    return min(MAX_GROUP, max(1, n // 3))


def _angle(vector: np.ndarray, direction: np.ndarray) -> float:
    norm = np.linalg.norm(vector)
    if norm == 0:
        return 0.0
    cosine = float(np.dot(vector, direction) / norm)
    return float(np.arccos(np.clip(cosine, -1.0, 1.0)))


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else vector


def select_setups(archive: ParetoArchive, min_robustness: Optional[float] = MIN_ROBUSTNESS,
                  limits: WorkZone = WORK_ZONE) -> Selection:
    entries = selectable(archive, min_robustness, limits)
    if len(entries) < 2:
        raise SelectionError(f"Need at least two selectable setups, found {len(entries)}")

    size = group_size(len(entries))
    ascending = sorted(entries, key=lambda e: (e.objectives.iae, e.index))
    descending = sorted(entries, key=lambda e: (-e.objectives.iae, e.index))

    def smoothest(group):
        return min(group, key=lambda e: (e.objectives.m_epsilon, e.index))

    setup1 = smoothest(ascending[:size])
    setup3 = smoothest(descending[:size])

    scale = np.asarray(limits, dtype=float)
    first = np.asarray(setup1.objectives) / scale
    last = np.asarray(setup3.objectives) / scale
    bisector = _unit(_unit(first) + _unit(last))

    low, high = sorted((setup1.objectives.iae, setup3.objectives.iae))
    middle = [e for e in entries if low <= e.objectives.iae <= high]
    setup2 = min(middle, key=lambda e: (_angle(np.asarray(e.objectives) / scale, bisector), e.index))

    logger.info(f"Selected candidates {setup1.index}, {setup2.index}, {setup3.index} of {len(entries)}")
    return Selection(setup1, setup2, setup3)
