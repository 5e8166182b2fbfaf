"""
Linear time-varying MPC on the lateral error model.

The model is linearized at the current speed, discretized and held over
the prediction horizon. Moves after the control horizon repeat the last
free move. The condensed problem

    min  sum_{i=1..h_p} y_i^2 + w * sum_{i=0..h_c-1} (u_i - u_{i-1})^2
    s.t. |u_i| <= 1,  |u_i - u_{i-1}| <= rate

is solved with the box/rate active-set QP, warm-started from the previous
optimal sequence shifted by one step.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from controllers.services.base import FeedbackController, Measurement
from controllers.services.config import NLMPCConfig
from lateralbench.options import SimulationOptions
from numerics.services.qp import QPResult, solve_box_rate_qp
from numerics.services.riccati import StateSpaceModel
from vehicle.services.error_model import discrete_error_model
from vehicle.services.params import VehicleParams

logger = logging.getLogger(__name__)

OUTPUT = np.array([1.0, 0.0, 0.0, 0.0])


def prediction_matrices(model: StateSpaceModel, h_p: int, h_c: int,
                        input_scale: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """(Phi, Gamma) with stacked outputs y_{1..h_p} = Phi x0 + Gamma z."""
    A, B = model.A, model.B[:, 0] * input_scale
    n = A.shape[0]
    Phi = np.zeros((h_p, n))
    Gamma = np.zeros((h_p, h_c))

    # impulse[k] = C A^k B
    power = np.eye(n)
    impulse = np.zeros(h_p)
    for k in range(h_p):
        impulse[k] = OUTPUT @ power @ B
        power = A @ power
        Phi[k] = OUTPUT @ power

    for i in range(1, h_p + 1):
        for j in range(i):
            Gamma[i - 1, min(j, h_c - 1)] += impulse[i - 1 - j]
    return Phi, Gamma


def rate_matrix(h_c: int) -> np.ndarray:
    D = np.eye(h_c)
    D[np.arange(1, h_c), np.arange(h_c - 1)] = -1.0
    return D


def nlmpc_qp(x0, model: StateSpaceModel, config: NLMPCConfig, params: VehicleParams,
             previous_u: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Hessian and gradient of the condensed problem in normalized moves."""
    Phi, Gamma = prediction_matrices(model, config.h_p, config.h_c, params.delta_max / params.R_S)
    D = rate_matrix(config.h_c)
    first = np.zeros(config.h_c)
    first[0] = 1.0
    hessian = Gamma.T @ Gamma + config.w_rate * D.T @ D
    gradient = Gamma.T @ (Phi @ np.asarray(x0, dtype=float)) - config.w_rate * previous_u * (D.T @ first)
    return hessian, gradient


def rate_limit(params: VehicleParams, sample_time: float) -> float:
    return params.delta_rate_max * sample_time / params.delta_max


@dataclass
class NLMPCState:
    previous_u: float = 0.0
    solution: Optional[np.ndarray] = None
    last_result: Optional[QPResult] = None

    def warm_start(self, h_c: int) -> np.ndarray:
        if self.solution is None or self.solution.size != h_c:
            return np.full(h_c, self.previous_u)
        return np.append(self.solution[1:], self.solution[-1])


def nlmpc_step(x0, v_x: float, state: NLMPCState, config: NLMPCConfig, params: VehicleParams,
               options: SimulationOptions) -> float:
    """First optimal move for error state x0 = [e_y, de_y, e_psi, de_psi] (e_y left-positive)."""
    T_s = options.control_period
    model = discrete_error_model(max(v_x, options.min_model_speed), params, T_s)
    hessian, gradient = nlmpc_qp(x0, model, config, params, state.previous_u)
    result = solve_box_rate_qp(
        hessian, gradient,
        previous=state.previous_u,
        amplitude=1.0,
        rate=rate_limit(params, T_s),
        start=state.warm_start(config.h_c),
        max_iter=options.qp_max_iter,
    )
    state.solution = result.solution
    state.last_result = result
    state.previous_u = float(result.solution[0])
    return state.previous_u


def measured_error_state(measurement: Measurement) -> np.ndarray:
    """Error state at the preview point from the vehicle's own motion."""
    heading_rate = measurement.yaw_rate - measurement.v_x * measurement.kappa
    lateral_rate = (measurement.v_x * math.sin(measurement.e_psi)
                    + measurement.v_y * math.cos(measurement.e_psi)
                    + measurement.preview_distance * heading_rate)
    return np.array([-measurement.y_1, lateral_rate, measurement.e_psi, heading_rate])


class NLMPCController(FeedbackController):
    kind = "nlmpc"

    def reset(self):
        super().reset()
        self.state = NLMPCState()

    def compute(self, measurement: Measurement) -> float:
        return nlmpc_step(measured_error_state(measurement), measurement.v_x, self.state,
                          self.config.params, self.params, self.options)

    def step(self, measurement: Measurement) -> float:
        u = super().step(measurement)
        # held command must seed the next rate constraint
        self.state.previous_u = u
        return u
