"""
Nondominated archive of tuned candidates.

Objectives are minimized. ``a`` dominates ``b`` when it is no worse in every
objective and strictly better in at least one; candidates with equal
objectives do not dominate each other and are both kept.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from lateralbench.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

OBJECTIVES = ("iae", "m_epsilon", "m_zeta")


class Objectives(NamedTuple):
    iae: float
    m_epsilon: float
    m_zeta: float

    @property
    def finite(self) -> bool:
        return all(math.isfinite(value) for value in self)

    @classmethod
    def failed(cls) -> "Objectives":
        return cls(math.inf, math.inf, math.inf)


class WorkZone(NamedTuple):
    iae: float = 0.35
    m_epsilon: float = 0.25
    m_zeta: float = 0.7


WORK_ZONE = WorkZone()


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def weakly_dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x <= y for x, y in zip(a, b))


@dataclass(frozen=True)
class ArchiveEntry:
    index: int
    parameters: Tuple[float, ...]
    objectives: Objectives
    mesh: float = 1.0
    robustness: Optional[float] = None

    def with_robustness(self, robustness: float) -> "ArchiveEntry":
        return replace(self, robustness=robustness)


class ParetoArchive:
    """Entries sorted by candidate index; no entry dominates another."""

    def __init__(self, names: Sequence[str], entries: Iterable[ArchiveEntry] = (), evaluations: int = 0):
        self.names = tuple(names)
        self.evaluations = evaluations
        self._entries: List[ArchiveEntry] = []
        for entry in entries:
            self.insert(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[ArchiveEntry]:
        return iter(self._entries)

    @property
    def entries(self) -> List[ArchiveEntry]:
        return list(self._entries)

    def get(self, index: int) -> ArchiveEntry:
        for entry in self._entries:
            if entry.index == index:
                return entry
        raise KeyError(index)

    def insert(self, entry: ArchiveEntry) -> bool:
        """Add ``entry`` unless it is dominated or failed; drop the entries it dominates."""
        if len(entry.parameters) != len(self.names):
            raise ConfigurationError(f"Entry has {len(entry.parameters)} parameters, archive has {len(self.names)}")
        if not entry.objectives.finite:
            return False
        if any(dominates(kept.objectives, entry.objectives) for kept in self._entries):
            return False
        self._entries = [kept for kept in self._entries if not dominates(entry.objectives, kept.objectives)]
        self._entries.append(entry)
        self._entries.sort(key=lambda kept: kept.index)
        return True

    def replace_entry(self, entry: ArchiveEntry):
        self._entries = [entry if kept.index == entry.index else kept for kept in self._entries]

    def subset(self, keep) -> "ParetoArchive":
        archive = ParetoArchive(self.names, evaluations=self.evaluations)
        archive._entries = [entry for entry in self._entries if keep(entry)]
        return archive

    def parameters(self, entry: ArchiveEntry) -> Dict[str, float]:
        return dict(zip(self.names, entry.parameters))

    def objective_matrix(self) -> np.ndarray:
        return np.array([entry.objectives for entry in self._entries], dtype=float).reshape(-1, len(OBJECTIVES))

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for entry in self._entries:
            row = {"index": entry.index, **self.parameters(entry), **entry.objectives._asdict(),
                   "robustness": entry.robustness, "mesh": entry.mesh}
            rows.append(row)
        columns = ["index", *self.names, *OBJECTIVES, "robustness", "mesh"]
        return pd.DataFrame(rows, columns=columns)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, evaluations: int = 0) -> "ParetoArchive":
        missing = {"index", *OBJECTIVES} - set(frame.columns)
        if missing:
            raise ConfigurationError(f"Archive is missing columns: {', '.join(sorted(missing))}")
        names = [c for c in frame.columns if c not in ("index", *OBJECTIVES, "robustness", "mesh")]
        archive = cls(names, evaluations=evaluations)
        for row in frame.itertuples(index=False):
            values = row._asdict()
            robustness = values.get("robustness")
            archive.insert(ArchiveEntry(
                index=int(values["index"]),
                parameters=tuple(float(values[name]) for name in names),
                objectives=Objectives(*(float(values[name]) for name in OBJECTIVES)),
                mesh=float(values.get("mesh", 1.0)),
                robustness=None if robustness is None or pd.isna(robustness) else float(robustness),
            ))
        return archive


def workzone_filter(archive: ParetoArchive, limits: WorkZone = WORK_ZONE) -> ParetoArchive:
    """Entries inside the work zone (limits inclusive)."""
    return archive.subset(lambda entry: weakly_dominates(entry.objectives, limits))
