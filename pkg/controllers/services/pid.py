import logging
from dataclasses import dataclass

from controllers.services.base import FeedbackController, Measurement
from controllers.services.config import PIDConfig
from numerics.services.filters import FilterState, filtered_derivative_step

logger = logging.getLogger(__name__)


@dataclass
class PIDState:
    derivative: FilterState
    integral: float = 0.0
    previous_error: float = 0.0

    @classmethod
    def fresh(cls, config: PIDConfig, sample_time: float) -> "PIDState":
        # zero initial conditions, as in the transfer function
        return cls(FilterState.from_bandwidth(config.N_PID, sample_time, previous_input=0.0))


def pid_step(error: float, state: PIDState, config: PIDConfig, sample_time: float) -> float:
    """Parallel PID: forward-Euler integrator, derivative filtered with pole N_PID."""
    state.integral += sample_time * state.previous_error
    derivative = filtered_derivative_step(state.derivative, error, sample_time)
    state.previous_error = error
    return config.K_p * error + config.K_i * state.integral + config.K_d * derivative


class PIDController(FeedbackController):
    kind = "pid"

    def reset(self):
        super().reset()
        self.state = PIDState.fresh(self.config.params, self.options.control_period)

    def compute(self, measurement: Measurement) -> float:
        return pid_step(measurement.y_1, self.state, self.config.params, self.options.control_period)
