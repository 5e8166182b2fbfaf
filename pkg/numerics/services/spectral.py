from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from lateralbench.exceptions import ConfigurationError, EmptySpectrogramError


@dataclass(frozen=True)
class Spectrogram:
    section_times: np.ndarray  # section centres, s
    frequencies: np.ndarray    # Hz
    power: np.ndarray          # sections x bins

    def band(self, low: float, high: float) -> np.ndarray:
        """Boolean mask of bins with low <= f <= high."""
        return (self.frequencies >= low - 1e-9) & (self.frequencies <= high + 1e-9)


def stft_power(signal, f_s: float, section: float = 5.0, overlap_fraction: float = 0.5,
               window: str = "hann") -> Spectrogram:
    """One-sided windowed power spectrum of every section.

    Power is scaled so that the bins of a section sum to the energy of the
    windowed section (Parseval).
    """
    if not 0 <= overlap_fraction < 1:
        raise ConfigurationError(f"overlap_fraction must lie in [0, 1), got {overlap_fraction}")
    if not f_s > 0 or not section > 0:
        raise ConfigurationError("f_s and section must be positive")

    x = np.asarray(signal, dtype=float)
    n_section = int(round(section * f_s))
    if n_section < 2 or x.size < n_section:
        raise EmptySpectrogramError(
            f"Signal of {x.size} samples is shorter than one {section} s section"
        )

    hop = max(1, int(round(n_section * (1.0 - overlap_fraction))))
    frames = np.lib.stride_tricks.sliding_window_view(x, n_section)[::hop]
    taper = get_window(window, n_section)
    spectrum = np.fft.rfft(frames * taper, axis=1)

    power = np.abs(spectrum) ** 2 / n_section
    if n_section % 2 == 0:
        power[:, 1:-1] *= 2.0
    else:
        power[:, 1:] *= 2.0

    starts = np.arange(frames.shape[0]) * hop
    return Spectrogram(
        section_times=(starts + 0.5 * n_section) / f_s,
        frequencies=np.fft.rfftfreq(n_section, d=1.0 / f_s),
        power=power,
    )
