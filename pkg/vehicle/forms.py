import json
import logging
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from django import forms

from lateralbench.exceptions import ConfigurationError
from vehicle.services.params import VehicleParams

logger = logging.getLogger(__name__)


def _positive(label: str) -> forms.FloatField:
    return forms.FloatField(required=False, label=label, min_value=0.0,
                            validators=[_strictly_positive])


def _strictly_positive(value):
    if value is not None and not value > 0:
        raise forms.ValidationError("Must be strictly positive.")


class VehicleParamsForm(forms.Form):
    """Vehicle parameter file: flat mapping of VehicleParams names in SI units.

    Missing keys keep their default value.
    """

    m = _positive("Mass [kg]")
    I_z = _positive("Yaw inertia [kg m^2]")
    C_f = _positive("Front cornering stiffness [N/rad]")
    C_r = _positive("Rear cornering stiffness [N/rad]")
    l_f = _positive("CG to front axle [m]")
    l_r = _positive("CG to rear axle [m]")
    J_s = _positive("Steering inertia [kg m^2]")
    B_u = _positive("Steering viscosity [N m s]")
    R_S = _positive("Steering ratio")
    delta_max = _positive("Steering-wheel limit [rad]")
    delta_rate_max = _positive("Steering-wheel rate limit [rad/s]")
    mu = forms.FloatField(required=False, label="Friction coefficient", max_value=1.5,
                          validators=[_strictly_positive])
    a3 = _positive("Lateral stiffness-slip factor [N/rad]")
    g = _positive("Gravity [m/s^2]")

    def clean(self):
        cleaned = super().clean()
        unknown = set(self.data) - set(self.fields)
        if unknown:
            raise forms.ValidationError(f"Unknown vehicle parameters: {', '.join(sorted(unknown))}")
        return cleaned

    def to_params(self, base: Optional[VehicleParams] = None) -> VehicleParams:
        base = base or VehicleParams()
        changes = {k: v for k, v in self.cleaned_data.items() if v is not None}
        return base.with_changes(**changes)


def form_errors(form: forms.Form) -> str:
    return "; ".join(
        f"{field}: {' '.join(messages)}" for field, messages in form.errors.items()
    )


def load_vehicle_params(source: Union[str, Path, Mapping[str, Any], None] = None) -> VehicleParams:
    """Validated parameters from a JSON file, a mapping, or the defaults when ``None``."""
    if source is None:
        return VehicleParams()
    if isinstance(source, Mapping):
        data = dict(source)
    else:
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"Cannot read vehicle file {source}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"Vehicle file {source} must hold a JSON object")

    form = VehicleParamsForm(data=data)
    if not form.is_valid():
        raise ConfigurationError(f"Invalid vehicle parameters: {form_errors(form)}")
    params = form.to_params()
    logger.debug(f"Loaded vehicle parameters: {params}")
    return params
