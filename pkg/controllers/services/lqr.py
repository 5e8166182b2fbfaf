import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from controllers.services.base import FeedbackController, Measurement
from controllers.services.config import LQRConfig
from lateralbench.options import SimulationOptions
from numerics.services.filters import FilterState, filtered_derivative_step
from numerics.services.riccati import solve_dare
from vehicle.services.error_model import discrete_error_model
from vehicle.services.params import VehicleParams

logger = logging.getLogger(__name__)


@lru_cache(maxsize=512)
def lqr_gain(v_x: float, weights: Tuple[float, float, float, float], params: VehicleParams,
             sample_time: float, tolerance: float = 1e-12, max_iterations: int = 100_000) -> np.ndarray:
    """Row gain K for u = -K x on the discretized error model (R = 1)."""
    model = discrete_error_model(v_x, params, sample_time)
    K = solve_dare(model.A, model.B, np.diag(weights), np.eye(1), tolerance, max_iterations)
    logger.debug(f"LQR gain at v_x={v_x:.2f} m/s: {K.ravel()}")
    K.setflags(write=False)
    return K


@dataclass
class LQRState:
    lateral_rate: FilterState
    heading_rate: FilterState
    gain: Optional[np.ndarray] = None
    scheduled_speed: Optional[float] = None

    @classmethod
    def fresh(cls, config: LQRConfig) -> "LQRState":
        return cls(FilterState(config.N_LQR), FilterState(config.N_LQR))


def lqr_step(e_y: float, e_psi: float, v_x: float, state: LQRState, config: LQRConfig,
             params: VehicleParams, options: SimulationOptions) -> float:
    """Normalized steering from the scheduled LQR gain.

    ``e_y`` is left-positive; the derivative states come from the filtered
    derivative with smoothing ``N_LQR``.
    """
    T_s = options.control_period
    speed = max(v_x, options.min_model_speed)
    if state.scheduled_speed is None or abs(speed - state.scheduled_speed) > options.gain_schedule_step:
        state.gain = lqr_gain(speed, config.weights, params, T_s, options.dare_tol, options.dare_max_iter)
        state.scheduled_speed = speed

    x = np.array([
        e_y,
        filtered_derivative_step(state.lateral_rate, e_y, T_s),
        e_psi,
        filtered_derivative_step(state.heading_rate, e_psi, T_s),
    ])
    front_wheel = -float((state.gain @ x)[0])
    return front_wheel * params.R_S / params.delta_max


class LQRController(FeedbackController):
    kind = "lqr"

    def reset(self):
        super().reset()
        self.state = LQRState.fresh(self.config.params)

    def compute(self, measurement: Measurement) -> float:
        return lqr_step(-measurement.y_1, measurement.e_psi, measurement.v_x, self.state,
                        self.config.params, self.params, self.options)
