"""WPT-FFT dominant-frequency features and FFT-amplitude baseline statistics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signal import SignalSegment
from .spectrum import one_sided_amplitudes, top_bins
from .wavelets import wavelet_filters
from .wpt import _analysis_step, _check_divisible, synthesize_nodes


@dataclass(frozen=True)
class FeatureVector:
    """``m * 2**k`` features, leaf-major: all peaks of leaf 0, then leaf 1, ..."""

    values: np.ndarray
    k: int
    m: int
    wavelet: str

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def layout(self) -> list[tuple[int, int]]:
        return feature_layout(self.k, self.m)


def feature_layout(k: int, m: int) -> list[tuple[int, int]]:
    """(leaf index, peak rank) for every feature column."""
    return [(leaf, rank) for leaf in range(1 << k) for rank in range(m)]


def feature_size(k: int, m: int) -> int:
    return m * (1 << k)


def _as_matrix(segments) -> tuple[np.ndarray, float]:
    if isinstance(segments, SignalSegment):
        segments = [segments]
    segments = list(segments)
    if not segments:
        raise ValueError("no segments given")
    fs = segments[0].sample_rate
    n = segments[0].n_samples
    for s in segments:
        if s.sample_rate != fs or s.n_samples != n:
            raise ValueError("all segments must share length and sample rate")
    return np.stack([s.samples for s in segments]), fs


def padded_length(n: int, k: int) -> int:
    step = 1 << k
    return -(-n // step) * step


def elementary_waveforms(X: np.ndarray, k: int, wavelet="db4", pad: bool = False) -> np.ndarray:
    """Leaf waveforms for a batch of segments, shape ``(n_seg, 2**k, N_o)``.

    With ``pad=True`` a length not divisible by ``2**k`` is first extended by
    mirroring its tail; the waveforms are cropped back to ``N_o`` samples and
    still sum to the input.
    """
    pair = wavelet_filters(wavelet)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n_seg, n = X.shape
    if pad and n % (1 << k):
        extra = padded_length(n, k) - n
        if extra > n:
            raise ValueError(f"segment of {n} samples too short to pad for k={k}")
        X = np.concatenate([X, X[:, n - 1 :: -1][:, :extra]], axis=1)
    _check_divisible(X.shape[1], k)
    cur = X
    for _ in range(k):
        cur = _analysis_step(cur, pair)
    leaf_idx = np.tile(np.arange(1 << k), n_seg)
    waves = synthesize_nodes(cur, k, leaf_idx, pair)
    return waves[:, :n].reshape(n_seg, 1 << k, n)


def extract_feature_matrix(segments, k: int, m: int, wavelet="db4", pad: bool = False) -> np.ndarray:
    """Feature rows (``n_seg x m * 2**k``) for equally sized segments, in input order."""
    X, fs = _as_matrix(segments)
    n = X.shape[1]
    waves = elementary_waveforms(X, k, wavelet, pad=pad)
    amps = one_sided_amplitudes(waves.reshape(-1, n))
    bins = top_bins(amps, m)
    peak_amp = np.take_along_axis(amps, bins, axis=1)
    feats = peak_amp * (bins * (fs / n))
    return feats.reshape(X.shape[0], -1)


def extract_features(segment: SignalSegment, k: int, m: int, wavelet="db4", pad: bool = False) -> FeatureVector:
    """Amplitude x frequency (Hz) of the ``m`` dominant spectral peaks of every leaf waveform."""
    name = wavelet_filters(wavelet).name
    values = extract_feature_matrix([segment], k, m, name, pad=pad)[0]
    values.setflags(write=False)
    return FeatureVector(values, k, m, name)


BASELINE_NAMES = ("mean", "crest_factor", "kurtosis", "shannon_entropy")


def amplitude_statistics(amps: np.ndarray) -> dict[str, float]:
    """Mean, crest factor, kurtosis and base-2 Shannon entropy of a spectrum."""
    a = np.asarray(amps, dtype=np.float64).reshape(-1)
    total = a.sum()
    if not total > 0:
        raise ValueError("all-zero spectrum: crest factor and entropy are undefined")
    mean = a.mean()
    rms = np.sqrt(np.mean(a * a))
    var = np.mean((a - mean) ** 2)
    kurt = 0.0 if var == 0 else float(np.mean((a - mean) ** 4) / var**2)
    p = a / total
    nz = p[p > 0]
    entropy = float(-np.sum(nz * np.log2(nz)))
    return {
        "mean": float(mean),
        "crest_factor": float(a.max() / rms),
        "kurtosis": kurt,
        "shannon_entropy": entropy,
    }


def baseline_features(segment: SignalSegment, per_leaf: bool = False, k: int = 3, wavelet="db4"):
    """Four scalar statistics of the segment's FFT amplitude vector.

    With ``per_leaf=True`` the statistics are computed for each of the
    ``2**k`` leaf waveforms instead and returned as arrays.
    """
    if segment.n_samples < 4:
        raise ValueError("baseline features need at least 4 samples")
    if not per_leaf:
        return amplitude_statistics(one_sided_amplitudes(segment.samples))
    waves = elementary_waveforms(segment.samples, k, wavelet)[0]
    amps = one_sided_amplitudes(waves)
    rows = [amplitude_statistics(a) for a in amps]
    return {name: np.array([r[name] for r in rows]) for name in BASELINE_NAMES}


def baseline_matrix(segments: Sequence[SignalSegment]) -> np.ndarray:
    return np.array(
        [[baseline_features(s)[n] for n in BASELINE_NAMES] for s in segments]
    )
