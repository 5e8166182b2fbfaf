"""Frozen view of the ``LATERAL_BENCH`` settings passed explicitly to services.

Worker processes spawned by joblib do not see ``override_settings`` from the
parent, so every long-running entry point resolves a ``SimulationOptions``
once and hands it down.
"""

from dataclasses import dataclass, fields, replace

from django.conf import settings

from lateralbench.exceptions import ConfigurationError


@dataclass(frozen=True)
class SimulationOptions:
    control_period: float = 0.05
    plant_step: float = 0.001
    max_lateral_error: float = 3.0
    path_step: float = 0.5
    min_model_speed: float = 1.0
    gain_schedule_step: float = 0.5
    end_tolerance: float = 1.0
    timeout_factor: float = 2.0
    speed_gain: float = 1.0
    speed_lookahead: float = 1.0
    creep_speed: float = 0.5
    qp_max_iter: int = 10
    dare_tol: float = 1e-12
    dare_max_iter: int = 100000

    def __post_init__(self):
        if not 0 < self.plant_step <= 0.01:
            raise ConfigurationError(f"plant_step must lie in (0, 0.01], got {self.plant_step}")
        if self.control_period < self.plant_step:
            raise ConfigurationError("control_period must not be shorter than plant_step")

    @property
    def substeps(self) -> int:
        return max(1, int(round(self.control_period / self.plant_step)))

    @classmethod
    def from_settings(cls, **overrides) -> "SimulationOptions":
        configured = getattr(settings, "LATERAL_BENCH", {}) or {}
        values = {}
        for field in fields(cls):
            key = field.name.upper()
            if key in configured:
                values[field.name] = field.type(configured[key]) if field.type in (int, float) else configured[key]
        values.update(overrides)
        return cls(**values)

    def with_changes(self, **changes) -> "SimulationOptions":
        return replace(self, **changes)
