from vehicle.services.params import VehicleParams

PROPORTIONAL_GAIN = 18.0
DERIVATIVE_GAIN = 5.0
PNEUMATIC_TRAIL = 0.03


def steering_lowlevel_step(delta_d: float, delta_d_rate: float, delta_ref: float,
                           params: VehicleParams) -> float:
    """PD torque (N*m) on the steering column driving delta_d toward delta_ref."""
    limited = min(max(delta_ref, -params.delta_max), params.delta_max)
    return PROPORTIONAL_GAIN * (limited - delta_d) - DERIVATIVE_GAIN * delta_d_rate


def self_aligning_torque(front_force: float, params: VehicleParams) -> float:
    return PNEUMATIC_TRAIL * front_force / params.R_S
