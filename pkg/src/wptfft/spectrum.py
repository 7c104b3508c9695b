"""One-sided amplitude spectra and dominant-peak selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AmplitudeSpectrum:
    freqs: np.ndarray
    amps: np.ndarray
    source_length: int
    sample_rate: float


@dataclass(frozen=True)
class SpectralPeak:
    amplitude: float
    frequency: float


def one_sided_amplitudes(x: np.ndarray) -> np.ndarray:
    """Amplitudes of the rows of ``x`` scaled so that a unit sinusoid reads 1.

    Bins strictly between DC and Nyquist are scaled by ``2/N``; DC and (for
    even ``N``) the Nyquist bin by ``1/N``. No window, no zero padding.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    amps = np.abs(np.fft.rfft(x, axis=-1)) * (2.0 / n)
    amps[..., 0] *= 0.5
    if n % 2 == 0:
        amps[..., -1] *= 0.5
    return amps


def amplitude_spectrum(waveform, sample_rate: float) -> AmplitudeSpectrum:
    x = np.asarray(waveform, dtype=np.float64).reshape(-1)
    n = x.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples for a spectrum, got {n}")
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    amps = one_sided_amplitudes(x)
    freqs = np.arange(amps.shape[0]) * (sample_rate / n)
    return AmplitudeSpectrum(freqs, amps, n, float(sample_rate))


def top_bins(amps: np.ndarray, m: int) -> np.ndarray:
    """Indices of the ``m`` largest non-DC bins for each row of ``amps``.

    Ordered by decreasing amplitude, equal amplitudes by lower bin. This is
    the same as repeatedly taking the maximum and removing it.
    """
    amps = np.atleast_2d(amps)
    nb = amps.shape[-1] - 1
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > nb:
        raise ValueError(f"m={m} exceeds the {nb} non-DC bins available")
    body = amps[:, 1:]
    # stable sort on -amp keeps lower bins first among ties
    order = np.argsort(-body, axis=-1, kind="stable")[:, :m]
    return order + 1


def top_m_peaks(spectrum: AmplitudeSpectrum, m: int) -> list[SpectralPeak]:
    idx = top_bins(spectrum.amps, m)[0]
    return [SpectralPeak(float(spectrum.amps[j]), float(spectrum.freqs[j])) for j in idx]
