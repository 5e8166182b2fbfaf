import json
import logging
from dataclasses import asdict
from pathlib import Path as FilePath
from typing import Iterable, Optional, Union

import pandas as pd

from lateralbench.exceptions import ConfigurationError
from trajectory.services.benchmark import SUITE, benchmark_trajectory
from trajectory.services.paths import Path
from trajectory.services.speed_profile import DrivingLimits, Trajectory

logger = logging.getLogger(__name__)

COLUMNS = ["s", "x", "y", "heading", "curvature", "speed"]
MANIFEST = "manifest.json"


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    path = trajectory.path
    return pd.DataFrame({
        "s": path.s, "x": path.x, "y": path.y,
        "heading": path.heading, "curvature": path.curvature,
        "speed": trajectory.speed,
    }, columns=COLUMNS)


def write_trajectory_csv(trajectory: Trajectory, target: Union[str, FilePath]) -> FilePath:
    target = FilePath(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    trajectory_frame(trajectory).to_csv(target, index=False, float_format="%.9g")
    return target


def read_trajectory_csv(source: Union[str, FilePath], limits: DrivingLimits,
                        name: Optional[str] = None, purpose: str = "", usage: str = "") -> Trajectory:
    source = FilePath(source)
    try:
        frame = pd.read_csv(source)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ConfigurationError(f"Cannot read trajectory file {source}: {exc}") from exc

    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigurationError(f"Trajectory file {source} lacks columns: {', '.join(missing)}")
    if frame.empty or not frame["s"].is_monotonic_increasing or frame["s"].duplicated().any():
        raise ConfigurationError(f"Trajectory file {source} needs strictly increasing s")

    path = Path(*(frame[c].to_numpy(dtype=float) for c in COLUMNS[:5]))
    return Trajectory(name or source.stem, path, frame["speed"].to_numpy(dtype=float),
                      limits, purpose=purpose, usage=usage)


def write_suite(trajectories: Iterable[Trajectory], directory: Union[str, FilePath]) -> FilePath:
    """One CSV per trajectory plus a JSON manifest of limits, lengths and purposes."""
    directory = FilePath(directory)
    entries = []
    for trajectory in trajectories:
        target = write_trajectory_csv(trajectory, directory / f"{trajectory.name}.csv")
        entries.append({
            "name": trajectory.name,
            "file": target.name,
            "length": round(trajectory.length, 3),
            "duration": round(trajectory.duration, 3),
            "purpose": trajectory.purpose,
            "usage": trajectory.usage,
            "limits": asdict(trajectory.limits),
        })
    manifest = directory / MANIFEST
    manifest.write_text(json.dumps({"trajectories": entries}, indent=2))
    logger.info(f"Wrote {len(entries)} trajectories to {directory}")
    return manifest


def read_suite(directory: Union[str, FilePath]):
    directory = FilePath(directory)
    try:
        manifest = json.loads((directory / MANIFEST).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"Cannot read trajectory manifest in {directory}: {exc}") from exc
    return [
        read_trajectory_csv(directory / entry["file"], DrivingLimits(**entry["limits"]),
                            name=entry["name"], purpose=entry["purpose"], usage=entry["usage"])
        for entry in manifest["trajectories"]
    ]


def load_trajectory(reference: Union[str, FilePath], ds: float = 0.5) -> Trajectory:
    """A benchmark trajectory by name, or a CSV listed in the manifest of its directory."""
    if str(reference) in SUITE:
        return benchmark_trajectory(str(reference), ds)
    source = FilePath(reference)
    try:
        manifest = json.loads((source.parent / MANIFEST).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(
            f"{reference} is neither a benchmark name ({', '.join(SUITE)}) nor a CSV next to a {MANIFEST}"
        ) from exc
    for entry in manifest.get("trajectories", []):
        if entry.get("file") == source.name:
            return read_trajectory_csv(source, DrivingLimits(**entry["limits"]), name=entry["name"],
                                       purpose=entry.get("purpose", ""), usage=entry.get("usage", ""))
    raise ConfigurationError(f"{source.name} is not listed in {source.parent / MANIFEST}")
