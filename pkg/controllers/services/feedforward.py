import math

from vehicle.services.params import VehicleParams


def clamp_unit(value: float) -> float:
    return min(max(value, -1.0), 1.0)


def feedforward(kappa: float, params: VehicleParams) -> float:
    """Normalized steering that follows curvature ``kappa`` with a kinematic bicycle."""
    return clamp_unit(params.R_S / params.delta_max * math.atan(params.wheelbase * kappa))
