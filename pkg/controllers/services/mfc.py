"""
Model-free control: second-order iPD on the ultra-local model

    y'' = F + alpha * u

with F re-estimated every sample from the filtered second derivative of the
regulated output and the previous command. The reference is zero, so the
tracking error is e = -y.
"""

import logging
from dataclasses import dataclass

from controllers.services.base import FeedbackController, Measurement
from controllers.services.config import DEFAULT_SMOOTHING, MFCConfig, SAMFCConfig
from controllers.services.feedforward import clamp_unit
from lateralbench.exceptions import ConfigurationError
from numerics.services.filters import FilterState, filtered_derivative_step

logger = logging.getLogger(__name__)


@dataclass
class MFCState:
    output_rate: FilterState
    output_acceleration: FilterState
    previous_u: float = 0.0
    estimate: float = 0.0

    @classmethod
    def fresh(cls, smoothing: float = DEFAULT_SMOOTHING) -> "MFCState":
        return cls(FilterState(smoothing), FilterState(smoothing))


def ipd_control(y: float, state: MFCState, K_p: float, K_d: float, alpha: float, sample_time: float) -> float:
    if not alpha > 0:
        raise ConfigurationError(f"alpha must be positive, got {alpha}")

    y_rate = filtered_derivative_step(state.output_rate, y, sample_time)
    y_acceleration = filtered_derivative_step(state.output_acceleration, y_rate, sample_time)
    state.estimate = y_acceleration - alpha * state.previous_u

    u = clamp_unit((-state.estimate + K_p * (-y) + K_d * (-y_rate)) / alpha)
    state.previous_u = u
    return u


def samfc_gain(v_x: float, config: SAMFCConfig) -> float:
    if v_x < config.v_x0:
        return config.alpha_0
    return config.K_alpha * (v_x - config.v_x0) + config.alpha_0


def mfc_step(y: float, state: MFCState, config: MFCConfig, sample_time: float) -> float:
    return ipd_control(y, state, config.K_p, config.K_d, config.alpha, sample_time)


def samfc_step(y: float, v_x: float, state: MFCState, config: SAMFCConfig, sample_time: float) -> float:
    return ipd_control(y, state, config.K_p, config.K_d, samfc_gain(v_x, config), sample_time)


class MFCController(FeedbackController):
    """Regulates the left-positive preview deviation -y_1 to zero."""

    kind = "mfc"

    def reset(self):
        super().reset()
        self.state = MFCState.fresh(self.config.params.C)

    def compute(self, measurement: Measurement) -> float:
        return mfc_step(-measurement.y_1, self.state, self.config.params, self.options.control_period)


class SAMFCController(MFCController):
    kind = "samfc"

    def compute(self, measurement: Measurement) -> float:
        return samfc_step(-measurement.y_1, measurement.v_x, self.state, self.config.params,
                          self.options.control_period)
