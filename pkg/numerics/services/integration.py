from typing import Callable

import numpy as np

from lateralbench.exceptions import ConfigurationError, IntegrationError

Derivative = Callable[[np.ndarray, object], np.ndarray]


def integrate_rk4(state, derivative: Derivative, inputs, dt: float) -> np.ndarray:
    """Advance ``state`` by one classical Runge-Kutta step of length ``dt``.

    ``inputs`` are held constant over the step (zero-order hold).
    """
    if not dt > 0:
        raise ConfigurationError(f"Integration step must be positive, got {dt}")

    x = np.asarray(state, dtype=float)
    half = 0.5 * dt
    k1 = derivative(x, inputs)
    k2 = derivative(x + half * k1, inputs)
    k3 = derivative(x + half * k2, inputs)
    k4 = derivative(x + dt * k3, inputs)
    increment = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    # NaN and inf from any stage propagate into the increment
    if not np.all(np.isfinite(increment)):
        raise IntegrationError(f"Non-finite derivative while integrating from {x!r}")
    return x + increment
