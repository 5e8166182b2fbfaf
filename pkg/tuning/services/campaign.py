import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import pandas as pd

from controllers.services.config import ControllerConfig
from lateralbench.exceptions import ConfigurationError
from tuning.services.archive import ParetoArchive
from tuning.services.evaluation import TUNING_TRAJECTORIES, candidate_config, default_space, space_from_mapping
from tuning.services.robustness import DEFAULT_DRAWS
from tuning.services.search import FULL_SCALE_BUDGET, ParameterSpace
from tuning.services.selection import MIN_ROBUSTNESS, Selection

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CampaignConfig:
    """One tuning campaign: a controller family searched over a parameter box."""

    family: str
    budget: int = 200
    seed: int = 0
    trajectories: Tuple[str, ...] = TUNING_TRAJECTORIES
    bounds: Dict[str, Dict[str, float]] = field(default_factory=dict)
    draws: int = DEFAULT_DRAWS
    min_robustness: float = MIN_ROBUSTNESS

    @property
    def space(self) -> ParameterSpace:
        if not self.bounds:
            return default_space(self.family)
        return space_from_mapping(self.family, self.bounds)

    def full_scale(self) -> "CampaignConfig":
        return replace(self, budget=FULL_SCALE_BUDGET)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "budget": self.budget,
            "seed": self.seed,
            "trajectories": list(self.trajectories),
            "bounds": self.space.to_dict(),
            "draws": self.draws,
            "min_robustness": self.min_robustness,
        }

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def selected_configs(campaign: CampaignConfig, selection: Selection,
                     notes: Optional[str] = None) -> Dict[str, ControllerConfig]:
    """Controller files for the three selected setups, named like the bundled ones."""
    label = campaign.family.upper()
    configs = {}
    for number, entry in enumerate(selection, start=1):
        name = f"{label}-{number}"
        config = candidate_config(campaign.family, campaign.space, entry.parameters, name=name)
        configs[f"{campaign.family}-{number}"] = replace(
            config, notes=notes or f"candidate {entry.index} of campaign seed {campaign.seed}"
        )
    return configs


def campaign_archive(campaign: CampaignConfig, frame: pd.DataFrame) -> ParetoArchive:
    """Archive read back from its table; its parameter columns must match the campaign space."""
    archive = ParetoArchive.from_frame(frame)
    if archive.names != campaign.space.names:
        raise ConfigurationError(
            f"Archive parameters {', '.join(archive.names)} do not match the {campaign.family} campaign"
        )
    return archive
