import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal as sps

from lateralbench.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass
class FilterState:
    """State of the filtered derivative D(z) = (1/T_s)(1 - z^-1) / (C + (1 - C) z^-1).

    ``previous_input`` of ``None`` means the filter primes itself with the
    first sample, which then yields a zero derivative.
    """

    smoothing: float
    previous_input: Optional[float] = None
    previous_output: float = 0.0

    def __post_init__(self):
        if not self.smoothing > 0:
            raise ConfigurationError(f"Filter smoothing must be positive, got {self.smoothing}")

    @classmethod
    def from_bandwidth(cls, bandwidth: float, sample_time: float, **kwargs) -> "FilterState":
        """Derivative filter with pole N, written as K_d*N/(1 + N*T_s/(1 - z^-1))."""
        if not bandwidth > 0:
            raise ConfigurationError(f"Filter bandwidth must be positive, got {bandwidth}")
        return cls(smoothing=1.0 / (bandwidth * sample_time), **kwargs)

    def reset(self, previous_input: Optional[float] = None):
        self.previous_input = previous_input
        self.previous_output = 0.0


def filtered_derivative_step(state: FilterState, sample: float, sample_time: float) -> float:
    if not sample_time > 0:
        raise ConfigurationError(f"Sample time must be positive, got {sample_time}")

    if state.previous_input is None:
        state.previous_input = sample
    C = state.smoothing
    output = ((sample - state.previous_input) / sample_time + (C - 1.0) * state.previous_output) / C
    state.previous_input = sample
    state.previous_output = output
    return output


def highpass_filter(signal, f_s: float, cutoff: float, order: int = 2) -> np.ndarray:
    """Zero-phase Butterworth high-pass (bilinear transform, second-order sections).

    The signal is padded by odd extension over three cutoff periods so the
    filter start-up transient decays before the first real sample.
    """
    if not 0 < cutoff < f_s / 2:
        raise ConfigurationError(f"Cutoff {cutoff} Hz outside (0, {f_s / 2}) Hz")

    x = np.asarray(signal, dtype=float)
    if x.size < 2:
        return np.zeros_like(x)

    sos = sps.butter(order, cutoff, btype="highpass", fs=f_s, output="sos")
    padlen = min(x.size - 1, int(round(3.0 * f_s / cutoff)))
    return sps.sosfiltfilt(sos, x, padlen=padlen)
