import math
from dataclasses import dataclass
from typing import Tuple

from lateralbench.exceptions import ConfigurationError, DegenerateSpeedError
from vehicle.services.params import NOMINAL_A3, VehicleParams

MIN_SLIP_SPEED = 0.1

LINEAR = "linear"
MAGIC_FORMULA = "magic_formula"


@dataclass(frozen=True)
class TireModel:
    kind: str = LINEAR
    shape: float = 1.3

    def __post_init__(self):
        if self.kind not in (LINEAR, MAGIC_FORMULA):
            raise ConfigurationError(f"Unknown tire model {self.kind!r}")
        if not 1.0 < self.shape < 2.0:
            raise ConfigurationError(f"Shape factor must lie in (1, 2), got {self.shape}")

    def coefficients(self, params: VehicleParams) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """(B, D) per axle; cornering stiffness B*C*D is the a3-scaled axle stiffness."""
        scale = params.a3 / NOMINAL_A3
        result = []
        for stiffness, load in ((params.C_f, params.front_axle_load), (params.C_r, params.rear_axle_load)):
            peak = params.mu * load
            result.append((2.0 * stiffness * scale / (self.shape * peak), peak))
        return result[0], result[1]


def slip_angles(v_x: float, v_y: float, yaw_rate: float, delta: float,
                params: VehicleParams) -> Tuple[float, float]:
    if v_x < MIN_SLIP_SPEED:
        raise DegenerateSpeedError(f"Slip angles undefined at v_x={v_x:.3f} m/s")
    alpha_f = delta - math.atan((v_y + yaw_rate * params.l_f) / v_x)
    alpha_r = -math.atan((v_y - yaw_rate * params.l_r) / v_x)
    return alpha_f, alpha_r


def axle_forces(alpha_f: float, alpha_r: float, params: VehicleParams, tire: TireModel) -> Tuple[float, float]:
    if tire.kind == LINEAR:
        return 2.0 * params.C_f * alpha_f, 2.0 * params.C_r * alpha_r

    (b_f, d_f), (b_r, d_r) = tire.coefficients(params)
    C = tire.shape
    return (
        d_f * math.sin(C * math.atan(b_f * alpha_f)),
        d_r * math.sin(C * math.atan(b_r * alpha_r)),
    )


def lateral_tire_forces(v_x: float, v_y: float, yaw_rate: float, delta: float,
                        params: VehicleParams, tire: TireModel) -> Tuple[float, float]:
    """Front and rear axle lateral forces (N) for front-wheel angle ``delta``."""
    alpha_f, alpha_r = slip_angles(v_x, v_y, yaw_rate, delta, params)
    return axle_forces(alpha_f, alpha_r, params, tire)
