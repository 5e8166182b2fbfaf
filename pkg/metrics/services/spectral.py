"""
Spectral indicators of the feedback action.

Both indicators score the STFT of the high-passed u_fb section by section:
the score of a section is the largest in-band value of 10*log10(P) + lambda,
clamped at zero, times the scale s. The low-frequency indicator averages the
scores over the long straight parts of the run; the high-frequency one takes
the worst section of the whole run.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from lateralbench.exceptions import ConfigurationError, EmptySpectrogramError
from numerics.services.filters import highpass_filter
from numerics.services.spectral import stft_power

logger = logging.getLogger(__name__)

MEAN = "mean"
MAX = "max"


@dataclass(frozen=True)
class SpectralMetricConfig:
    band: Tuple[float, float]
    hpf_cutoff: float
    scale: float
    threshold: float
    section: float = 5.0
    aggregation: str = MEAN
    overlap_fraction: float = 0.5

    def __post_init__(self):
        low, high = self.band
        if not 0 < low < high:
            raise ConfigurationError(f"Invalid band {self.band}")
        if not self.scale > 0:
            raise ConfigurationError(f"Scale must be positive, got {self.scale}")
        if self.aggregation not in (MEAN, MAX):
            raise ConfigurationError(f"Unknown aggregation {self.aggregation!r}")

    def check_rate(self, f_s: float):
        if self.band[1] > f_s / 2 + 1e-9:
            raise ConfigurationError(f"Band {self.band} Hz exceeds the Nyquist frequency of {f_s} Hz")


EPSILON = SpectralMetricConfig(band=(1.1, 4.0), hpf_cutoff=0.5, scale=0.015, threshold=80.0, aggregation=MEAN)
ZETA = SpectralMetricConfig(band=(4.0, 10.0), hpf_cutoff=4.0, scale=0.04, threshold=80.0, aggregation=MAX)


def section_scores(signal, f_s: float, config: SpectralMetricConfig) -> np.ndarray:
    """Score of every STFT section of ``signal``."""
    config.check_rate(f_s)
    filtered = highpass_filter(signal, f_s, config.hpf_cutoff)
    spectrogram = stft_power(filtered, f_s, config.section, config.overlap_fraction)
    in_band = spectrogram.power[:, spectrogram.band(*config.band)]
    with np.errstate(divide="ignore"):
        level = 10.0 * np.log10(in_band) + config.threshold
    return config.scale * np.maximum(level, 0.0).max(axis=1)


def _aggregate(scores: np.ndarray, config: SpectralMetricConfig) -> float:
    return float(np.max(scores) if config.aggregation == MAX else np.mean(scores))


def straight_segments(s, sections: Sequence[Tuple[float, float]]) -> List[Tuple[int, int]]:
    """Tick index ranges [start, stop) of the log whose arclength lies in a straight section."""
    s = np.asarray(s, dtype=float)
    segments: List[Tuple[int, int]] = []
    for first, last in sections:
        inside = (s >= first) & (s <= last)
        edges = np.diff(np.concatenate([[0], inside.astype(int), [0]]))
        segments.extend(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))
    return sorted(segments)


def m_epsilon(u_fb, segments: Sequence[Tuple[int, int]], f_s: float = 20.0,
              config: SpectralMetricConfig = EPSILON) -> Optional[float]:
    """Mean section score over the straight segments; None when no segment spans a section."""
    u_fb = np.asarray(u_fb, dtype=float)
    scores = []
    for start, stop in segments:
        try:
            scores.append(section_scores(u_fb[start:stop], f_s, config))
        except EmptySpectrogramError:
            logger.debug(f"Straight segment [{start}, {stop}) shorter than one section, skipped")
    if not scores:
        return None
    return _aggregate(np.concatenate(scores), config)


def m_zeta(u_fb, f_s: float = 20.0, config: SpectralMetricConfig = ZETA) -> Optional[float]:
    """Worst section score over the whole run; None when the run is shorter than a section."""
    try:
        scores = section_scores(u_fb, f_s, config)
    except EmptySpectrogramError:
        return None
    return _aggregate(scores, config)
