"""
Artifact files with provenance.

CSV artifacts start with a ``# version=... seed=... config_hash=...`` line
followed by the table; JSON artifacts carry a ``provenance`` object. Floats
are written with a fixed format so identical runs give identical bytes.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import pandas as pd

from lateralbench import __version__
from lateralbench.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


@dataclass(frozen=True)
class Provenance:
    seed: int
    config_hash: str
    version: str = __version__

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def header(self) -> str:
        return f"# version={self.version} seed={self.seed} config_hash={self.config_hash}"

    @classmethod
    def parse(cls, line: str) -> "Provenance":
        try:
            values = dict(item.split("=", 1) for item in line.lstrip("#").split())
            return cls(int(values["seed"]), values["config_hash"], values["version"])
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"Malformed provenance line: {line!r}") from exc


def config_hash(*payloads: Any) -> str:
    """SHA-256 over the canonical JSON of the configurations behind an artifact."""
    text = json.dumps(payloads, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def file_payload(path: Union[str, Path, None]) -> Optional[str]:
    """Contents of an input file for hashing; ``None`` stays ``None``."""
    if path is None:
        return None
    try:
        return Path(path).read_text()
    except OSError:
        return str(path)


def write_csv(frame: pd.DataFrame, target: Union[str, Path], provenance: Provenance) -> Path:
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as handle:
        handle.write(provenance.header() + "\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {target}")
    return target


def read_csv(source: Union[str, Path]) -> Tuple[pd.DataFrame, Optional[Provenance]]:
    source = Path(source)
    try:
        with source.open() as handle:
            first = handle.readline()
            provenance = Provenance.parse(first) if first.startswith("#") else None
        frame = pd.read_csv(source, skiprows=1 if provenance else 0)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ConfigurationError(f"Cannot read {source}: {exc}") from exc
    return frame, provenance


def write_json(payload: Mapping[str, Any], target: Union[str, Path], provenance: Provenance) -> Path:
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    document = {**payload, "provenance": provenance.to_dict()}
    target.write_text(json.dumps(document, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return target


def read_json(source: Union[str, Path]) -> Dict[str, Any]:
    try:
        return json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"Cannot read {source}: {exc}") from exc


def _jsonable(value):
    # numpy scalars
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
