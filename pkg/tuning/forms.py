import json
import logging
from pathlib import Path
from typing import Any, Mapping, Union

from django import forms

from controllers.services.config import FAMILIES
from lateralbench.exceptions import ConfigurationError
from trajectory.services.benchmark import SUITE
from tuning.services.campaign import CampaignConfig
from tuning.services.evaluation import DEFAULT_BOUNDS, TUNING_TRAJECTORIES
from tuning.services.search import MIN_BUDGET
from vehicle.forms import form_errors

logger = logging.getLogger(__name__)


class CampaignConfigForm(forms.Form):
    """Tuning campaign file. ``bounds`` maps parameter names to {lower, upper[, step]}."""

    family = forms.ChoiceField(choices=[(kind, kind) for kind in FAMILIES])
    budget = forms.IntegerField(required=False, min_value=MIN_BUDGET)
    seed = forms.IntegerField(required=False, min_value=0)
    trajectories = forms.JSONField(required=False)
    bounds = forms.JSONField(required=False)
    draws = forms.IntegerField(required=False, min_value=1)
    min_robustness = forms.FloatField(required=False, min_value=0.0, max_value=100.0)

    def clean_trajectories(self):
        value = self.cleaned_data.get("trajectories")
        if value in (None, ""):
            return list(TUNING_TRAJECTORIES)
        if not isinstance(value, list) or not value or not all(name in SUITE for name in value):
            raise forms.ValidationError(f"Must be a nonempty list drawn from {', '.join(SUITE)}.")
        return value

    def clean_bounds(self):
        value = self.cleaned_data.get("bounds")
        if value in (None, ""):
            return {}
        if not isinstance(value, dict):
            raise forms.ValidationError("Must map parameter names to {lower, upper} objects.")
        for name, bound in value.items():
            if not isinstance(bound, dict) or not {"lower", "upper"} <= set(bound):
                raise forms.ValidationError(f"{name} needs lower and upper.")
        return value

    def clean(self):
        cleaned = super().clean()
        unknown = set(self.data) - set(self.fields)
        if unknown:
            raise forms.ValidationError(f"Unknown campaign fields: {', '.join(sorted(unknown))}")
        family, bounds = cleaned.get("family"), cleaned.get("bounds") or {}
        if family:
            extra = set(bounds) - set(DEFAULT_BOUNDS[family])
            if extra:
                self.add_error("bounds", f"Not tunable for {family}: {', '.join(sorted(extra))}")
        return cleaned

    def to_campaign(self) -> CampaignConfig:
        data = self.cleaned_data
        values = {
            "family": data["family"],
            "trajectories": tuple(data["trajectories"]),
            "bounds": data["bounds"],
        }
        for key in ("budget", "seed", "draws", "min_robustness"):
            if data.get(key) is not None:
                values[key] = data[key]
        return CampaignConfig(**values)


def load_campaign_config(source: Union[str, Path, Mapping[str, Any]]) -> CampaignConfig:
    if isinstance(source, Mapping):
        data = dict(source)
    else:
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"Cannot read campaign file {source}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("Campaign configuration must be a JSON object")

    # JSONField expects serialized input
    form_data = {key: json.dumps(value) if key in ("trajectories", "bounds") else value
                 for key, value in data.items()}
    form = CampaignConfigForm(data=form_data)
    if not form.is_valid():
        raise ConfigurationError(f"Invalid campaign configuration: {form_errors(form)}")
    campaign = form.to_campaign()
    space = campaign.space
    logger.debug(f"Campaign {campaign.family}: {len(space)} parameters, budget {campaign.budget}")
    return campaign
