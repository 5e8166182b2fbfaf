import numpy as np

from lateralbench.exceptions import ConfigurationError


def _series(e_y) -> np.ndarray:
    values = np.asarray(e_y, dtype=float)
    if values.size == 0:
        raise ConfigurationError("Lateral error series is empty")
    return values


def iae_raw(e_y, dt: float) -> float:
    """Integral of |e_y| over the run, m*s."""
    return float(np.sum(np.abs(_series(e_y))) * dt)


def iae(e_y, dt: float) -> float:
    """Time-averaged absolute lateral error, m."""
    values = _series(e_y)
    return iae_raw(values, dt) / (values.size * dt)


def mle(e_y) -> float:
    return float(np.max(np.abs(_series(e_y))))
