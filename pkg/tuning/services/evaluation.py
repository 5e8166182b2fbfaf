import logging
from dataclasses import dataclass, fields
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from controllers.services.config import FAMILIES, ControllerConfig, PreviewConfig, family_params
from controllers.services.runner import run_closed_loop
from lateralbench.exceptions import ConfigurationError
from lateralbench.options import SimulationOptions
from metrics.services.report import evaluate_log
from trajectory.services.benchmark import benchmark_trajectory
from tuning.services.archive import Objectives
from tuning.services.search import Parameter, ParameterSpace
from vehicle.services.params import VehicleParams
from vehicle.services.tires import LINEAR, TireModel

logger = logging.getLogger(__name__)

TUNING_TRAJECTORIES = ("T1", "T5", "T6")
PREVIEW_PARAMETER = "t_p"

# (lower, upper) per tuned parameter; families' remaining fields stay at FIXED_VALUES
DEFAULT_BOUNDS: Dict[str, Dict[str, Tuple[float, float]]] = {
    "lqr": {"q1": (1e-4, 2e-2), "q2": (1e-5, 2e-3), "q3": (1e-4, 1e-2), "q4": (1e-5, 2e-3),
            "N_LQR": (1.0, 60.0), "t_p": (0.0, 2.0)},
    "mfc": {"K_p": (0.0, 2.0), "K_d": (0.2, 30.0), "alpha": (40.0, 4000.0), "t_p": (0.0, 3.0)},
    "samfc": {"K_p": (0.0, 2.0), "K_d": (0.2, 40.0), "alpha_0": (10.0, 900.0), "v_x0": (0.0, 25.0),
              "K_alpha": (1.0, 100.0), "t_p": (0.0, 3.0)},
    "pid": {"K_p": (0.007, 1.6), "K_i": (0.0, 0.5), "K_d": (0.003, 0.6), "N_PID": (1.0, 20.0),
            "t_p": (0.0, 3.0)},
    "nlmpc": {"h_p": (3.0, 40.0), "h_c": (1.0, 8.0), "w_rate": (1.0, 400.0), "t_p": (0.0, 1.0)},
}

FIXED_VALUES: Dict[str, Dict[str, float]] = {"mfc": {"C": 1.5}, "samfc": {"C": 1.5}}


def default_space(kind: str) -> ParameterSpace:
    if kind not in DEFAULT_BOUNDS:
        raise ConfigurationError(f"Unknown controller type {kind!r}")
    bounds = DEFAULT_BOUNDS[kind]
    return ParameterSpace(tuple(Parameter(name, lower, upper) for name, (lower, upper) in bounds.items()))


def candidate_config(kind: str, space: ParameterSpace, values: Sequence[float], name: str = "") -> ControllerConfig:
    """Controller configuration for a point of ``space``; integer fields are rounded."""
    named = dict(zip(space.names, (float(v) for v in values)))
    t_p = named.pop(PREVIEW_PARAMETER, 0.0)
    integer_fields = {f.name for f in fields(FAMILIES[kind]) if f.type is int}
    params = {**FIXED_VALUES.get(kind, {}), **named}
    for key in integer_fields & set(params):
        params[key] = max(1, int(round(params[key])))
    if kind == "nlmpc" and {"h_p", "h_c"} <= set(params):
        params["h_c"] = min(params["h_c"], params["h_p"])
    return ControllerConfig(kind, family_params(kind, params), PreviewConfig(t_p=max(t_p, 0.0)), name=name)


def evaluate_candidate(config: ControllerConfig, trajectories: Sequence[str] = TUNING_TRAJECTORIES,
                       params: Optional[VehicleParams] = None, tire: Optional[TireModel] = None,
                       options: Optional[SimulationOptions] = None) -> Objectives:
    """Worst IAE, M_epsilon and M_zeta over ``trajectories``; any failed run fails the candidate."""
    options = options or SimulationOptions.from_settings()
    worst = [0.0, 0.0, 0.0]
    for name in trajectories:
        trajectory = benchmark_trajectory(name, options.path_step)
        log = run_closed_loop(trajectory, config, params, tire, options)
        report = evaluate_log(log, trajectory)
        if report.diverged:
            logger.debug(f"{config.label} failed on {name} ({report.status})")
            return Objectives.failed()
        values = (report.iae, report.m_epsilon, report.m_zeta)
        # M_epsilon is absent on runs without a long straight
        worst = [w if v is None else max(w, v) for w, v in zip(worst, values)]
    return Objectives(*worst)


@dataclass(frozen=True)
class CandidateEvaluator:
    """Picklable objective for the search: parameter vector to objectives."""

    kind: str
    space: ParameterSpace
    trajectories: Tuple[str, ...] = TUNING_TRAJECTORIES
    vehicle: VehicleParams = VehicleParams()
    tire: TireModel = TireModel(LINEAR)
    options: Optional[SimulationOptions] = None

    def __call__(self, values: np.ndarray) -> Objectives:
        config = candidate_config(self.kind, self.space, values)
        return evaluate_candidate(config, self.trajectories, self.vehicle, self.tire, self.options)


def space_from_mapping(kind: str, bounds: Mapping[str, Mapping[str, float]]) -> ParameterSpace:
    """Campaign bounds override the defaults parameter by parameter."""
    if kind not in DEFAULT_BOUNDS:
        raise ConfigurationError(f"Unknown controller type {kind!r}")
    merged = {name: {"lower": lower, "upper": upper} for name, (lower, upper) in DEFAULT_BOUNDS[kind].items()}
    for name, bound in bounds.items():
        if name not in merged:
            raise ConfigurationError(f"{name} is not a tunable {kind} parameter")
        merged[name] = dict(bound)
    return ParameterSpace.from_dict(merged)
