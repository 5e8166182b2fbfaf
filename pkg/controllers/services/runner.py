"""
Closed-loop simulation: 20 Hz preview/feedforward/feedback loop around the
plant, which is integrated with the low-level steering loop at every
inner step.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import List, NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from controllers.services.base import Measurement
from controllers.services.config import ControllerConfig
from controllers.services.factory import make_controller
from controllers.services.feedforward import clamp_unit, feedforward
from lateralbench.exceptions import EndOfPathError, SimulationDivergedError
from lateralbench.options import SimulationOptions
from trajectory.services.speed_profile import Trajectory
from vehicle.services.params import VehicleParams
from vehicle.services.plant import VehicleState, advance
from vehicle.services.tires import LINEAR, TireModel
from vehicle.services.tracking import PathTracker, tracking_errors

logger = logging.getLogger(__name__)

COMPLETED = "completed"
DIVERGED = "diverged"
TIMED_OUT = "timed_out"

TIMEOUT_MARGIN = 30.0


class ControlTick(NamedTuple):
    t: float
    s: float
    x: float
    y: float
    heading: float
    v_x: float
    preview_distance: float
    y_1: float
    e_psi: float
    e_y: float
    kappa_preview: float
    kappa: float
    u_ff: float
    u_fb: float
    u_total: float
    delta_t: float
    clamped: bool
    fault: bool


COLUMNS = list(ControlTick._fields)


@dataclass
class SimLog:
    frame: pd.DataFrame
    status: str
    trajectory: str = ""
    controller: str = ""
    runtimes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    control_period: float = 0.05

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    @property
    def diverged(self) -> bool:
        return self.status == DIVERGED

    def __len__(self) -> int:
        return len(self.frame)

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy(dtype=float)

    def to_csv(self, target: Union[str, FilePath]) -> FilePath:
        target = FilePath(target)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(target, index=False, float_format="%.10g")
        return target

    def runtime_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"controller": self.controller, "trajectory": self.trajectory,
                             "runtime": self.runtimes})


def longitudinal_command(trajectory: Trajectory, s: float, v_x: float, options: SimulationOptions) -> float:
    """Acceleration tracking the planned profile a short distance ahead."""
    ahead = min(s + options.speed_lookahead, trajectory.length)
    target = max(trajectory.speed_at(ahead), options.creep_speed)
    command = v_x * trajectory.speed_slope_at(ahead) + options.speed_gain * (target - v_x)
    limits = trajectory.limits
    return min(max(command, -limits.a_x_min), limits.a_x_max)


def initial_state(trajectory: Trajectory) -> np.ndarray:
    path = trajectory.path
    return VehicleState(x=float(path.x[0]), y=float(path.y[0]), heading=float(path.heading[0]),
                        v_x=float(trajectory.speed[0])).as_array()


def run_closed_loop(trajectory: Trajectory, config: ControllerConfig,
                    params: Optional[VehicleParams] = None, tire: Optional[TireModel] = None,
                    options: Optional[SimulationOptions] = None, seed: int = 0,
                    state=None, model_params: Optional[VehicleParams] = None) -> SimLog:
    """Simulate ``config`` on ``trajectory`` until the path end, divergence or timeout.

    ``params`` drive the plant; the controller and feedforward use
    ``model_params``, which default to ``params``. The run is deterministic;
    ``seed`` only tags the log.
    """
    params = params or VehicleParams()
    model_params = model_params or params
    tire = tire or TireModel(LINEAR)
    options = options or SimulationOptions.from_settings()
    controller = make_controller(config, model_params, options)
    tracker = PathTracker(trajectory.path)

    current = initial_state(trajectory) if state is None else np.asarray(state, dtype=float).copy()
    deadline = options.timeout_factor * trajectory.duration + TIMEOUT_MARGIN
    T_s, substeps = options.control_period, options.substeps
    dt = T_s / substeps

    rows: List[ControlTick] = []
    runtimes: List[float] = []
    status = TIMED_OUT
    logger.debug(f"Running {config.label} on {trajectory.name} (seed {seed})")

    tick = 0
    while True:
        t = tick * T_s
        if t > deadline:
            logger.warning(f"{config.label} on {trajectory.name} timed out after {t:.1f} s")
            break

        v_x = float(current[3])
        preview = config.preview.distance(v_x)
        try:
            errors = tracking_errors(current, trajectory.path, preview, tracker)
        except EndOfPathError:
            status = COMPLETED
            break
        if trajectory.length - errors.s <= options.end_tolerance:
            status = COMPLETED
            break
        if abs(errors.e_y) > options.max_lateral_error:
            status = DIVERGED
            logger.warning(f"{config.label} on {trajectory.name} left the path at s={errors.s:.1f} m")
            break

        u_ff = feedforward(errors.kappa_preview, model_params)
        measurement = Measurement(t, errors.y_1, errors.e_psi, v_x, float(current[4]), float(current[5]),
                                  errors.kappa, preview)
        started = time.perf_counter()
        u_fb = controller.step(measurement)
        runtimes.append(time.perf_counter() - started)

        raw = u_ff + u_fb
        u_total = clamp_unit(raw)
        delta_t = params.delta_max * u_total
        rows.append(ControlTick(
            t, errors.s, float(current[0]), float(current[1]), float(current[2]), v_x, preview,
            errors.y_1, errors.e_psi, errors.e_y, errors.kappa_preview, errors.kappa,
            u_ff, u_fb, u_total, delta_t, raw != u_total, controller.fault,
        ))

        a_command = longitudinal_command(trajectory, errors.s, v_x, options)
        try:
            current = advance(current, delta_t, a_command, dt, substeps, params, tire)
        except SimulationDivergedError as exc:
            status = DIVERGED
            logger.warning(f"{config.label} on {trajectory.name}: {exc}")
            break
        tick += 1

    frame = pd.DataFrame(rows, columns=COLUMNS)
    logger.debug(f"{config.label} on {trajectory.name}: {status} after {len(frame)} ticks")
    return SimLog(frame, status, trajectory.name, config.label, np.array(runtimes), T_s)
