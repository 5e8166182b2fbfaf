import json
import logging
from pathlib import Path
from typing import Any, Mapping, Union

from django import forms

from controllers.services.config import FAMILIES, ControllerConfig, family_params, preview_config
from lateralbench.exceptions import ConfigurationError
from vehicle.forms import form_errors

logger = logging.getLogger(__name__)


class PreviewForm(forms.Form):
    d_p0 = forms.FloatField(required=False, min_value=0.0)
    t_p = forms.FloatField(required=False, min_value=0.0)


class LQRParamsForm(forms.Form):
    q1 = forms.FloatField(min_value=0.0)
    q2 = forms.FloatField(min_value=0.0)
    q3 = forms.FloatField(min_value=0.0)
    q4 = forms.FloatField(min_value=0.0)
    N_LQR = forms.FloatField(min_value=1e-9)


class MFCParamsForm(forms.Form):
    K_p = forms.FloatField(min_value=0.0)
    K_d = forms.FloatField(min_value=0.0)
    alpha = forms.FloatField(min_value=1e-9)
    C = forms.FloatField(required=False, min_value=1e-9)


class SAMFCParamsForm(forms.Form):
    K_p = forms.FloatField(min_value=0.0)
    K_d = forms.FloatField(min_value=0.0)
    alpha_0 = forms.FloatField(min_value=1e-9)
    v_x0 = forms.FloatField(min_value=0.0)
    K_alpha = forms.FloatField(min_value=0.0)
    C = forms.FloatField(required=False, min_value=1e-9)


class PIDParamsForm(forms.Form):
    K_p = forms.FloatField(min_value=0.0)
    K_i = forms.FloatField(min_value=0.0)
    K_d = forms.FloatField(min_value=0.0)
    N_PID = forms.FloatField(min_value=1e-9)


class NLMPCParamsForm(forms.Form):
    h_p = forms.IntegerField(min_value=1)
    h_c = forms.IntegerField(min_value=1)
    w_rate = forms.FloatField(min_value=0.0)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("h_c") and cleaned.get("h_p") and cleaned["h_c"] > cleaned["h_p"]:
            raise forms.ValidationError("h_c must not exceed h_p.")
        return cleaned


PARAM_FORMS = {
    "lqr": LQRParamsForm,
    "mfc": MFCParamsForm,
    "samfc": SAMFCParamsForm,
    "pid": PIDParamsForm,
    "nlmpc": NLMPCParamsForm,
}


class ControllerConfigForm(forms.Form):
    type = forms.ChoiceField(choices=[(kind, kind) for kind in FAMILIES])
    name = forms.CharField(required=False, max_length=64)
    notes = forms.CharField(required=False)


def _check(form: forms.Form, what: str, data: Mapping[str, Any]):
    if not form.is_valid():
        raise ConfigurationError(f"Invalid {what}: {form_errors(form)}")
    unknown = set(data) - set(form.fields)
    if unknown:
        raise ConfigurationError(f"Unknown {what} fields: {', '.join(sorted(unknown))}")


def load_controller_config(source: Union[str, Path, Mapping[str, Any]]) -> ControllerConfig:
    """Validated controller configuration from a JSON file or a mapping."""
    if isinstance(source, Mapping):
        data = dict(source)
    else:
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"Cannot read controller file {source}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("Controller configuration must be a JSON object")

    header = {k: v for k, v in data.items() if k not in ("params", "preview", "provenance")}
    _check(ControllerConfigForm(data=header), "controller configuration", header)
    kind = data["type"]

    missing = [key for key in ("params", "preview") if key not in data]
    if missing:
        raise ConfigurationError(f"Missing controller fields: {', '.join(missing)}")
    params, preview = data["params"], data["preview"]
    if not isinstance(params, dict) or not isinstance(preview, dict):
        raise ConfigurationError("params and preview must be JSON objects")
    _check(PARAM_FORMS[kind](data=params), f"{kind} parameters", params)
    _check(PreviewForm(data=preview), "preview", preview)

    return ControllerConfig(
        kind=kind,
        params=family_params(kind, params),
        preview=preview_config(preview),
        name=str(data.get("name", "")),
        notes=str(data.get("notes", "")),
    )
