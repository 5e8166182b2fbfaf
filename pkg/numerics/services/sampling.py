"""Seeded scalar sampling used by the Monte Carlo robustness screen."""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from lateralbench.exceptions import ConfigurationError


class SeedStream:
    """Reproducible stream of uniform deviates.

    ``SeedStream(seed, index)`` derives an independent stream per draw index
    from the campaign seed, so draws do not depend on execution order.
    """

    def __init__(self, seed: int, *spawn_key: int):
        sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key))
        self._generator = np.random.Generator(np.random.PCG64(sequence))
        self._spare: Optional[float] = None

    def uniform(self) -> float:
        """Deviate in [0, 1)."""
        return float(self._generator.random())

    def standard_normal(self) -> float:
        """Box-Muller transform of two uniform deviates; the second value is cached."""
        if self._spare is not None:
            value, self._spare = self._spare, None
            return value
        u1 = 1.0 - self.uniform()  # (0, 1], keeps log finite
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare = radius * math.sin(angle)
        return radius * math.cos(angle)


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma < 0:
            raise ConfigurationError(f"Invalid normal({self.mu}, {self.sigma})")

    def sample(self, stream: SeedStream) -> float:
        if self.sigma == 0:
            return self.mu
        return self.mu + self.sigma * stream.standard_normal()


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ConfigurationError(f"Invalid uniform({self.lo}, {self.hi})")

    def sample(self, stream: SeedStream) -> float:
        return self.lo + (self.hi - self.lo) * stream.uniform()


Distribution = Union[Normal, Uniform]


def sample_distribution(kind: Distribution, stream: SeedStream) -> float:
    return kind.sample(stream)


def sample_positive(kind: Distribution, stream: SeedStream, max_attempts: int = 1000) -> float:
    """Draw until the value is strictly positive (nonpositive draws are rejected)."""
    for _ in range(max_attempts):
        value = kind.sample(stream)
        if value > 0:
            return value
    raise ConfigurationError(f"{kind} produced no positive draw in {max_attempts} attempts")
