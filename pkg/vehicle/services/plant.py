"""
Nonlinear single-track plant with a second-order steering column.

State vector layout (``VehicleState`` field order):

    x, y, heading, v_x, v_y, yaw_rate, delta_d, delta_d_rate

``delta_d`` is the steering-wheel angle; the front-wheel angle is
``delta_d / R_S``. Below ``KINEMATIC_SPEED`` the lateral states relax
toward the kinematic bicycle solution instead of using slip angles.
"""

import logging
import math
from typing import NamedTuple, Tuple

import numpy as np

from lateralbench.exceptions import ConfigurationError, IntegrationError, SimulationDivergedError
from numerics.services.integration import integrate_rk4
from vehicle.services.params import VehicleParams
from vehicle.services.steering import self_aligning_torque, steering_lowlevel_step
from vehicle.services.tires import LINEAR, TireModel, lateral_tire_forces

logger = logging.getLogger(__name__)

KINEMATIC_SPEED = 0.5
KINEMATIC_RELAXATION = 0.02
MAX_PLANT_STEP = 0.01


class VehicleState(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    v_x: float = 0.0
    v_y: float = 0.0
    yaw_rate: float = 0.0
    delta_d: float = 0.0
    delta_d_rate: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def lateral_derivatives(v_x: float, v_y: float, yaw_rate: float, delta: float,
                        params: VehicleParams, tire: TireModel) -> Tuple[float, float, float, float]:
    """(dv_y/dt, dr/dt, F_yf, F_yr) of the dynamic single-track model."""
    F_yf, F_yr = lateral_tire_forces(v_x, v_y, yaw_rate, delta, params, tire)
    cos_delta = math.cos(delta)
    dv_y = (F_yf * cos_delta + F_yr) / params.m - v_x * yaw_rate
    dr = (params.l_f * F_yf * cos_delta - params.l_r * F_yr) / params.I_z
    return dv_y, dr, F_yf, F_yr


def plant_derivative(state: np.ndarray, inputs: Tuple[float, float],
                     params: VehicleParams, tire: TireModel) -> np.ndarray:
    """Time derivative of the state for (steering torque, acceleration command)."""
    torque, a_command = inputs
    _, _, heading, v_x, v_y, r, delta_d, delta_d_rate = state.tolist()
    delta = delta_d / params.R_S
    traction = params.mu * params.g

    if v_x < KINEMATIC_SPEED:
        r_kin = v_x * math.tan(delta) / params.wheelbase
        dv_y = (params.l_r * r_kin - v_y) / KINEMATIC_RELAXATION
        dr = (r_kin - r) / KINEMATIC_RELAXATION
        dv_x = min(max(a_command, -traction), traction)
        aligning = 0.0
    else:
        dv_y, dr, F_yf, _ = lateral_derivatives(v_x, v_y, r, delta, params, tire)
        # rear-axle drive force that realizes the commanded acceleration
        F_xr = params.m * (a_command - v_y * r) + F_yf * math.sin(delta)
        F_xr = min(max(F_xr, -params.m * traction), params.m * traction)
        dv_x = (F_xr - F_yf * math.sin(delta)) / params.m + v_y * r
        aligning = self_aligning_torque(F_yf, params)

    cos_h, sin_h = math.cos(heading), math.sin(heading)
    steering_accel = (torque - aligning - params.B_u * delta_d_rate) / params.J_s
    return np.array([
        v_x * cos_h - v_y * sin_h,
        v_x * sin_h + v_y * cos_h,
        r,
        dv_x,
        dv_y,
        dr,
        delta_d_rate,
        steering_accel,
    ])


def _enforce_limits(state: np.ndarray, params: VehicleParams) -> np.ndarray:
    if state[6] > params.delta_max:
        state[6] = params.delta_max
        state[7] = min(state[7], 0.0)
    elif state[6] < -params.delta_max:
        state[6] = -params.delta_max
        state[7] = max(state[7], 0.0)
    state[7] = min(max(state[7], -params.delta_rate_max), params.delta_rate_max)
    if state[3] < 0.0:
        state[3] = 0.0
    return state


def plant_step(state, steering_torque: float, a_x_command: float, dt: float,
               params: VehicleParams, tire: TireModel = TireModel(LINEAR)) -> np.ndarray:
    """One RK4 step with torque and acceleration command held over ``dt``."""
    if not 0 < dt <= MAX_PLANT_STEP:
        raise ConfigurationError(f"Plant step must lie in (0, {MAX_PLANT_STEP}], got {dt}")
    current = np.asarray(state, dtype=float)
    try:
        advanced = integrate_rk4(
            current,
            lambda x, u: plant_derivative(x, u, params, tire),
            (steering_torque, a_x_command),
            dt,
        )
    except (IntegrationError, ValueError) as exc:
        raise SimulationDivergedError(f"Plant derivative diverged: {exc}") from exc

    if not np.all(np.isfinite(advanced)):
        raise SimulationDivergedError("Plant state became non-finite")
    return _enforce_limits(advanced, params)


def advance(state, delta_ref: float, a_x_command: float, dt: float, substeps: int,
            params: VehicleParams, tire: TireModel = TireModel(LINEAR)) -> np.ndarray:
    """Run ``substeps`` plant steps with the low-level steering loop closed at each one."""
    current = np.asarray(state, dtype=float)
    for _ in range(substeps):
        torque = steering_lowlevel_step(current[6], current[7], delta_ref, params)
        current = plant_step(current, torque, a_x_command, dt, params, tire)
    return current
