"""
Direct multisearch over a box of controller parameters.

Every archive entry carries its own mesh factor. An iteration polls the
entry with the coarsest mesh (lowest index on ties) along the positive and
negative coordinate directions, each scaled by the parameter's initial step
and the entry's mesh factor. If the poll adds a nondominated point the new
points inherit twice the mesh factor, otherwise the polled entry's factor is
halved. The search stops at the evaluation budget or once every entry's mesh
is below the tolerance on each parameter range.

Candidates are numbered in submission order, so the archive depends only on
the seed and budget, never on the number of parallel jobs.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from lateralbench.exceptions import ConfigurationError
from numerics.services.sampling import SeedStream
from tuning.services.archive import ArchiveEntry, Objectives, ParetoArchive

logger = logging.getLogger(__name__)

MIN_BUDGET = 50
MESH_TOLERANCE = 1e-3
MAX_MESH = 1.0
INITIAL_SAMPLES = 4
# full-scale campaign size
FULL_SCALE_BUDGET = 217_400

Objective = Callable[[np.ndarray], Objectives]


@dataclass(frozen=True)
class Parameter:
    name: str
    lower: float
    upper: float
    step: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or not self.lower < self.upper:
            raise ConfigurationError(f"Parameter {self.name} needs finite bounds lower < upper")
        if self.step is not None and not 0 < self.step <= self.upper - self.lower:
            raise ConfigurationError(f"Parameter {self.name} step must lie in (0, upper - lower]")

    @property
    def span(self) -> float:
        return self.upper - self.lower

    @property
    def initial_step(self) -> float:
        return self.step if self.step is not None else 0.25 * self.span


@dataclass(frozen=True)
class ParameterSpace:
    parameters: Tuple[Parameter, ...]

    def __post_init__(self):
        if not self.parameters:
            raise ConfigurationError("Parameter space is empty")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"Duplicate parameter names in {names}")

    def __len__(self) -> int:
        return len(self.parameters)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.parameters])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.parameters])

    @property
    def steps(self) -> np.ndarray:
        return np.array([p.initial_step for p in self.parameters])

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def clip(self, values) -> np.ndarray:
        return np.clip(np.asarray(values, dtype=float), self.lower, self.upper)

    def contains(self, values) -> bool:
        values = np.asarray(values, dtype=float)
        return bool(np.all(values >= self.lower) and np.all(values <= self.upper))

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {p.name: {"lower": p.lower, "upper": p.upper, "step": p.initial_step} for p in self.parameters}

    @classmethod
    def from_dict(cls, data: Dict[str, Dict[str, float]]) -> "ParameterSpace":
        try:
            return cls(tuple(Parameter(name, float(b["lower"]), float(b["upper"]),
                                       None if b.get("step") is None else float(b["step"]))
                             for name, b in data.items()))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"Invalid parameter space: {exc}") from exc


@dataclass
class SearchState:
    archive: ParetoArchive
    evaluated: Dict[Tuple[float, ...], Objectives]
    next_index: int = 0
    seed: int = 0

    @property
    def evaluations(self) -> int:
        return self.archive.evaluations

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "next_index": self.next_index,
            "evaluations": self.archive.evaluations,
            "names": list(self.archive.names),
            "archive": [[e.index, list(e.parameters), list(e.objectives), e.mesh] for e in self.archive],
            "evaluated": [[list(k), list(v)] for k, v in self.evaluated.items()],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SearchState":
        archive = ParetoArchive(data["names"], evaluations=int(data["evaluations"]))
        for index, parameters, objectives, mesh in data["archive"]:
            archive.insert(ArchiveEntry(int(index), tuple(parameters), Objectives(*objectives), float(mesh)))
        evaluated = {tuple(k): Objectives(*v) for k, v in data["evaluated"]}
        return cls(archive, evaluated, int(data["next_index"]), int(data["seed"]))


def _key(values: np.ndarray) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.round(values, 12))


def _initial_points(space: ParameterSpace, seed: int) -> List[np.ndarray]:
    stream = SeedStream(seed, 0)
    points = [space.center]
    for _ in range(INITIAL_SAMPLES):
        draw = np.array([stream.uniform() for _ in range(len(space))])
        points.append(space.lower + draw * (space.upper - space.lower))
    return points


def _poll_points(space: ParameterSpace, center: ArchiveEntry) -> List[np.ndarray]:
    origin = np.asarray(center.parameters, dtype=float)
    points = []
    for i, step in enumerate(space.steps * center.mesh):
        for sign in (1.0, -1.0):
            point = origin.copy()
            point[i] += sign * step
            points.append(space.clip(point))
    return points


def _converged(space: ParameterSpace, entry: ArchiveEntry) -> bool:
    return bool(np.all(space.steps * entry.mesh < MESH_TOLERANCE * (space.upper - space.lower)))


def _evaluate_batch(points: Sequence[np.ndarray], state: SearchState, objective: Objective, jobs: int,
                    mesh: float) -> List[ArchiveEntry]:
    """Evaluate the unseen points and return them as archive entries, in submission order."""
    fresh = []
    for point in points:
        key = _key(point)
        if key not in state.evaluated and key not in [k for k, _ in fresh]:
            fresh.append((key, np.array(key)))
    if not fresh:
        return []

    if jobs == 1:
        results = [objective(point) for _, point in fresh]
    else:
        results = Parallel(n_jobs=jobs)(delayed(objective)(point) for _, point in fresh)

    entries = []
    for (key, _), result in zip(fresh, results):
        objectives = Objectives(*result)
        state.evaluated[key] = objectives
        entries.append(ArchiveEntry(state.next_index, key, objectives, mesh))
        state.next_index += 1
    state.archive.evaluations += len(entries)
    return entries


def write_checkpoint(state: SearchState, target: Union[str, FilePath]):
    target = FilePath(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    partial = target.with_suffix(target.suffix + ".tmp")
    partial.write_text(json.dumps(state.to_dict()))
    partial.replace(target)


def read_checkpoint(source: Union[str, FilePath]) -> SearchState:
    try:
        return SearchState.from_dict(json.loads(FilePath(source).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigurationError(f"Unreadable checkpoint {source}: {exc}") from exc


def pareto_search(space: ParameterSpace, objective: Objective, budget: int, seed: int = 0, jobs: int = 1,
                  checkpoint: Optional[Union[str, FilePath]] = None, stop_after: Optional[int] = None,
                  progress: bool = False) -> ParetoArchive:
    """Approximate the Pareto front of ``objective`` over ``space``.

    With ``checkpoint`` the state is saved after every iteration and a run
    resumes from an existing file. ``stop_after`` ends the run (leaving the
    checkpoint) once that many evaluations are done.
    """
    if budget < MIN_BUDGET:
        raise ConfigurationError(f"Budget must be at least {MIN_BUDGET} evaluations, got {budget}")

    if checkpoint is not None and FilePath(checkpoint).exists():
        state = read_checkpoint(checkpoint)
        if state.seed != seed or state.archive.names != space.names:
            raise ConfigurationError(f"Checkpoint {checkpoint} belongs to another campaign")
        logger.info(f"Resuming search from {checkpoint} after {state.evaluations} evaluations")
    else:
        state = SearchState(ParetoArchive(space.names), {}, seed=seed)

    bar = tqdm(total=budget, initial=state.evaluations, disable=not progress, desc="pareto search")

    def save():
        if checkpoint is not None:
            write_checkpoint(state, checkpoint)

    if state.next_index == 0:
        points = _initial_points(space, seed)[:budget]
        for entry in _evaluate_batch(points, state, objective, jobs, MAX_MESH):
            state.archive.insert(entry)
        bar.update(state.evaluations)
        save()

    while state.evaluations < budget:
        if stop_after is not None and state.evaluations >= stop_after:
            logger.info(f"Search stopped after {state.evaluations} evaluations")
            break
        open_entries = [entry for entry in state.archive if not _converged(space, entry)]
        if not open_entries:
            logger.info(f"Mesh converged after {state.evaluations} evaluations")
            break
        center = max(open_entries, key=lambda entry: (entry.mesh, -entry.index))

        points = _poll_points(space, center)[:budget - state.evaluations]
        before = state.evaluations
        expanded = min(2.0 * center.mesh, MAX_MESH)
        added = [entry for entry in _evaluate_batch(points, state, objective, jobs, expanded)
                 if state.archive.insert(entry)]
        bar.update(state.evaluations - before)

        if not added:
            state.archive.replace_entry(ArchiveEntry(center.index, center.parameters, center.objectives,
                                                     0.5 * center.mesh, center.robustness))
        save()

    bar.close()
    logger.info(f"Search finished: {len(state.archive)} nondominated of {state.evaluations} evaluations")
    return state.archive
