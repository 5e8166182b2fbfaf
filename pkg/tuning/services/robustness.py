"""
Monte Carlo robustness screen.

Each draw perturbs the plant (mass, yaw inertia, friction and tire
stiffness) while the controller keeps the nominal model. A draw succeeds
when the vehicle reaches the end of the path without exceeding the lateral
error threshold.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

from joblib import Parallel, delayed
from tqdm import tqdm

from controllers.services.config import ControllerConfig
from controllers.services.runner import COMPLETED, run_closed_loop
from lateralbench.exceptions import ConfigurationError
from lateralbench.options import SimulationOptions
from numerics.services.sampling import Distribution, Normal, SeedStream, Uniform, sample_positive
from trajectory.services.benchmark import benchmark_trajectory
from tuning.services.archive import ParetoArchive
from tuning.services.evaluation import candidate_config
from tuning.services.search import ParameterSpace
from vehicle.services.params import VehicleParams
from vehicle.services.tires import MAGIC_FORMULA, TireModel

logger = logging.getLogger(__name__)

ROBUSTNESS_TRAJECTORY = "T5"
DEFAULT_DRAWS = 200
ERROR_THRESHOLD = 3.0


@dataclass(frozen=True)
class RobustnessDistributions:
    m: Distribution = Normal(1372.0, 137.2)
    I_z: Distribution = Normal(1990.0, 199.0)
    mu: Distribution = Uniform(0.5, 1.17)
    a3: Distribution = Normal(80157.0, 16031.0)

    @classmethod
    def nominal(cls, params: VehicleParams = VehicleParams()) -> "RobustnessDistributions":
        return cls(Normal(params.m, 0.0), Normal(params.I_z, 0.0), Uniform(params.mu, params.mu),
                   Normal(params.a3, 0.0))

    def draw(self, seed: int, index: int, base: VehicleParams = VehicleParams()) -> VehicleParams:
        """Plant of draw ``index``; depends only on (seed, index)."""
        stream = SeedStream(seed, 1, index)
        values = {name: sample_positive(getattr(self, name), stream) for name in ("m", "I_z", "mu", "a3")}
        return base.with_changes(**values)


@dataclass(frozen=True)
class RobustnessResult:
    successes: int
    draws: int
    outcomes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def success_pct(self) -> float:
        return 100.0 * self.successes / self.draws


def _run_draw(config: ControllerConfig, plant: VehicleParams, nominal: VehicleParams, trajectory_name: str,
              options: SimulationOptions) -> str:
    trajectory = benchmark_trajectory(trajectory_name, options.path_step)
    log = run_closed_loop(trajectory, config, plant, TireModel(MAGIC_FORMULA), options, model_params=nominal)
    return log.status


def monte_carlo_robustness(config: ControllerConfig, n: int = DEFAULT_DRAWS, seed: int = 0,
                           distributions: Optional[RobustnessDistributions] = None,
                           trajectory: str = ROBUSTNESS_TRAJECTORY, threshold: float = ERROR_THRESHOLD,
                           nominal: VehicleParams = VehicleParams(), options: Optional[SimulationOptions] = None,
                           jobs: int = 1, progress: bool = False) -> RobustnessResult:
    if n < 1:
        raise ConfigurationError(f"Need at least one draw, got {n}")
    distributions = distributions or RobustnessDistributions()
    options = (options or SimulationOptions.from_settings()).with_changes(max_lateral_error=threshold)

    plants = [distributions.draw(seed, index, nominal) for index in range(n)]
    tasks = tqdm(plants, disable=not progress, desc=f"robustness {config.label}")
    if jobs == 1:
        outcomes = [_run_draw(config, plant, nominal, trajectory, options) for plant in tasks]
    else:
        outcomes = Parallel(n_jobs=jobs)(
            delayed(_run_draw)(config, plant, nominal, trajectory, options) for plant in tasks
        )

    result = RobustnessResult(sum(status == COMPLETED for status in outcomes), n, tuple(outcomes))
    logger.info(f"{config.label}: {result.success_pct:.1f}% of {n} draws succeeded")
    return result


def annotate_robustness(archive: ParetoArchive, kind: str, space: ParameterSpace, n: int = DEFAULT_DRAWS,
                        seed: int = 0, jobs: int = 1, options: Optional[SimulationOptions] = None,
                        distributions: Optional[RobustnessDistributions] = None) -> ParetoArchive:
    """Copy of ``archive`` with the success percentage of every entry."""
    annotated = archive.subset(lambda entry: True)
    for entry in archive:
        config = candidate_config(kind, space, entry.parameters, name=f"{kind}-{entry.index}")
        result = monte_carlo_robustness(config, n, seed, distributions, options=options, jobs=jobs)
        annotated.replace_entry(entry.with_robustness(result.success_pct))
    return annotated
