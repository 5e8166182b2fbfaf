import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, List

from controllers.services.config import FAMILIES, ControllerConfig
from lateralbench.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SETUP_DIR = Path(__file__).resolve().parent.parent / "setups"
SETUPS_PER_FAMILY = 3


@lru_cache(maxsize=None)
def bundled_setup(kind: str, index: int) -> ControllerConfig:
    """Setup ``index`` (1-based) of a family as selected from the tuned Pareto fronts."""
    if kind not in FAMILIES or not 1 <= index <= SETUPS_PER_FAMILY:
        raise ConfigurationError(f"No bundled setup {kind}-{index}")
    source = SETUP_DIR / f"{kind}-{index}.json"
    return ControllerConfig.from_dict(json.loads(source.read_text()))


def bundled_setups() -> Dict[str, List[ControllerConfig]]:
    return {
        kind: [bundled_setup(kind, i) for i in range(1, SETUPS_PER_FAMILY + 1)]
        for kind in FAMILIES
    }
