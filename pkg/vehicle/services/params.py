import logging
from dataclasses import asdict, dataclass, replace
from typing import Dict

from lateralbench.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# a3 value at which the magic-formula stiffness equals the nominal cornering stiffness
NOMINAL_A3 = 80157.0


@dataclass(frozen=True)
class VehicleParams:
    """Single-track vehicle and steering-actuator parameters (SI units).

    Mass, inertia, cornering stiffnesses and axle distances are the values
    estimated for the test platform. The steering-column values (J_s, B_u,
    R_S, delta_max, delta_rate_max) are typical passenger-car figures.
    """

    m: float = 1372.0
    I_z: float = 1990.0
    C_f: float = 37022.5
    C_r: float = 35900.0
    l_f: float = 0.98
    l_r: float = 1.48
    J_s: float = 0.05
    B_u: float = 0.4
    R_S: float = 16.0
    delta_max: float = 8.48
    delta_rate_max: float = 10.0
    mu: float = 1.0
    a3: float = NOMINAL_A3
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "I_z", "C_f", "C_r", "l_f", "l_r", "J_s", "B_u",
                     "R_S", "delta_max", "delta_rate_max", "a3", "g"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"Vehicle parameter {name} must be positive, got {value}")
        if not 0 < self.mu <= 1.5:
            raise ConfigurationError(f"Friction coefficient must lie in (0, 1.5], got {self.mu}")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r

    @property
    def front_axle_load(self) -> float:
        return self.m * self.g * self.l_r / self.wheelbase

    @property
    def rear_axle_load(self) -> float:
        return self.m * self.g * self.l_f / self.wheelbase

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    def with_changes(self, **changes) -> "VehicleParams":
        return replace(self, **changes)
