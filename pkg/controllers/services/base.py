import logging
from abc import ABC, abstractmethod
from typing import NamedTuple

from lateralbench.exceptions import DegenerateSpeedError, SolverError
from lateralbench.options import SimulationOptions
from controllers.services.config import ControllerConfig
from controllers.services.feedforward import clamp_unit
from vehicle.services.params import VehicleParams

logger = logging.getLogger(__name__)


class Measurement(NamedTuple):
    """What a feedback law sees at one control tick."""

    t: float
    y_1: float
    e_psi: float
    v_x: float
    v_y: float
    yaw_rate: float
    kappa: float
    preview_distance: float


class FeedbackController(ABC):
    """Stateful feedback law producing a normalized command in [-1, 1].

    Solver failures hold the previously applied command and raise the
    ``fault`` flag for that tick.
    """

    kind = ""

    def __init__(self, config: ControllerConfig, params: VehicleParams, options: SimulationOptions):
        self.config = config
        self.params = params
        self.options = options
        self.fault = False
        self.previous_u = 0.0
        self.reset()

    def reset(self):
        self.fault = False
        self.previous_u = 0.0

    @abstractmethod
    def compute(self, measurement: Measurement) -> float:
        ...

    def step(self, measurement: Measurement) -> float:
        self.fault = False
        try:
            u = clamp_unit(self.compute(measurement))
        except (SolverError, DegenerateSpeedError) as exc:
            logger.warning(f"{self.config.label} fault at t={measurement.t:.2f} s: {exc}")
            self.fault = True
            u = self.previous_u
        self.previous_u = u
        return u
