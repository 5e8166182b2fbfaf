"""Linearized lateral error dynamics, state [e_y, de_y, e_psi, de_psi], input front-wheel angle."""

import logging
from functools import lru_cache

import numpy as np

from lateralbench.exceptions import DegenerateSpeedError
from numerics.services.riccati import StateSpaceModel, discretize_zoh
from vehicle.services.params import VehicleParams

logger = logging.getLogger(__name__)

MIN_MODEL_SPEED = 0.5


def linearized_error_model(v_x: float, params: VehicleParams) -> StateSpaceModel:
    if not v_x > MIN_MODEL_SPEED:
        raise DegenerateSpeedError(f"Error model undefined at v_x={v_x:.3f} m/s")

    m, I_z, l_f, l_r = params.m, params.I_z, params.l_f, params.l_r
    c_f, c_r = 2.0 * params.C_f, 2.0 * params.C_r

    A = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, -(c_f + c_r) / (m * v_x), (c_f + c_r) / m, (-c_f * l_f + c_r * l_r) / (m * v_x)],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, -(l_f * c_f - l_r * c_r) / (I_z * v_x), (l_f * c_f - l_r * c_r) / I_z,
         -(l_f ** 2 * c_f + l_r ** 2 * c_r) / (I_z * v_x)],
    ])
    B = np.array([[0.0], [c_f / m], [0.0], [l_f * c_f / I_z]])
    return StateSpaceModel(A, B)


@lru_cache(maxsize=256)
def discrete_error_model(v_x: float, params: VehicleParams, sample_time: float) -> StateSpaceModel:
    """Zero-order-hold discretization, cached per scheduled speed."""
    logger.debug(f"Discretizing error model at v_x={v_x:.2f} m/s")
    return discretize_zoh(linearized_error_model(v_x, params), sample_time)
