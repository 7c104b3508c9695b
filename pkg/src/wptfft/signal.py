"""Vibration segments, segmentation and a synthetic bearing-fault generator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class SignalSegment:
    """A fixed-length window of accelerometer samples.

    ``samples`` is stored as a read-only float64 array so segments can be
    shared between threads without copying.
    """

    samples: np.ndarray
    sample_rate: float
    source_label: Optional[str] = None

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return segment_duration(self.n_samples, self.sample_rate)


def segment_duration(n_samples: int, sample_rate: float) -> float:
    """Acquisition time of a segment, ``N_o / f_s`` seconds."""
    if n_samples < 1:
        raise ValueError(f"segment must contain at least one sample, got {n_samples}")
    if not sample_rate > 0:
        raise ValueError(f"sample_rate must be positive, got {sample_rate}")
    return n_samples / sample_rate


def segment_count(length: int, window: int, hop: int) -> int:
    if length < window:
        return 0
    return (length - window) // hop + 1


def segment_signal(
    signal: Sequence[float] | np.ndarray,
    sample_rate: float,
    window: int,
    hop: Optional[int] = None,
    label: Optional[str] = None,
) -> list[SignalSegment]:
    """Cut ``signal`` into full windows of ``window`` samples every ``hop`` samples.

    ``hop`` defaults to ``window`` (non-overlapping). A trailing remainder
    shorter than one window is dropped, never padded.
    """
    if hop is None:
        hop = window
    if window < 1:
        raise ValueError("window must be >= 1")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    arr = np.asarray(signal, dtype=np.float64).reshape(-1)
    if arr.shape[0] < window:
        raise ValueError(
            f"input shorter than one window ({arr.shape[0]} < {window} samples)"
        )
    n = segment_count(arr.shape[0], window, hop)
    return [
        SignalSegment(arr[i * hop : i * hop + window], sample_rate, label)
        for i in range(n)
    ]


@dataclass(frozen=True)
class FaultSynthesisSpec:
    """Parameters of a synthetic bearing vibration record.

    A fault is modelled as a train of impulses at ``fault_rate`` per second,
    each ringing the structure at ``resonance_freq`` with exponential decay
    ``damping`` (1/s). ``speed_ramp=(start_rate, end_rate)`` sweeps the
    impulse rate linearly over the record instead.
    """

    sample_rate: float
    duration: float
    fault_rate: float = 0.0
    resonance_freq: float = 3000.0
    damping: float = 800.0
    impulse_amplitude: float = 1.0
    noise_sigma: float = 0.0
    speed_ramp: Optional[tuple[float, float]] = None
    rng_seed: int = 0
    label: Optional[str] = field(default=None, compare=True)

    def validate(self) -> None:
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.resonance_freq < self.sample_rate / 2:
            raise ValueError(
                f"resonance_freq {self.resonance_freq} Hz must be below Nyquist "
                f"({self.sample_rate / 2} Hz)"
            )
        if self.resonance_freq < 0:
            raise ValueError("resonance_freq must be nonnegative")
        if self.fault_rate < 0:
            raise ValueError("fault_rate must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")
        if self.speed_ramp is not None:
            lo, hi = self.speed_ramp
            if lo < 0 or hi < 0:
                raise ValueError("speed_ramp rates must be >= 0")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


def impulse_times(spec: FaultSynthesisSpec) -> np.ndarray:
    """Onset times (s) of the fault impulses within the record."""
    T = spec.n_samples / spec.sample_rate
    if spec.speed_ramp is None:
        if spec.fault_rate <= 0:
            return np.empty(0)
        count = int(math.floor(T * spec.fault_rate - 1e-12)) + 1
        return np.arange(count) / spec.fault_rate
    r0, r1 = (float(v) for v in spec.speed_ramp)
    if r0 == 0 and r1 == 0:
        return np.empty(0)
    # cumulative impulse count: phi(t) = r0 t + (r1 - r0) t^2 / (2T); impulse j fires at phi = j
    a = (r1 - r0) / (2 * T)
    total = r0 * T + a * T * T
    j = np.arange(int(math.floor(total - 1e-12)) + 1, dtype=np.float64)
    if a == 0:
        return j / r0
    disc = np.sqrt(np.maximum(r0 * r0 + 4 * a * j, 0.0))
    return (-r0 + disc) / (2 * a)


def synthesize_bearing_signal(spec: FaultSynthesisSpec) -> SignalSegment:
    """Render ``spec`` into a single long :class:`SignalSegment`.

    The output is a pure function of ``spec``: noise comes from a generator
    seeded with ``spec.rng_seed`` and nothing else.
    """
    spec.validate()
    n = spec.n_samples
    fs = spec.sample_rate
    out = np.zeros(n)

    onsets = impulse_times(spec)
    if onsets.size and spec.impulse_amplitude != 0:
        if spec.damping > 0:
            ring = int(math.ceil(fs * math.log(1e12) / spec.damping)) + 1
            ring = min(ring, n)
        else:
            ring = n
        start = np.ceil(onsets * fs - 1e-9).astype(np.int64)
        offs = np.arange(ring)
        for s0, t0 in zip(start, onsets):
            if s0 >= n:
                continue
            idx = s0 + offs[: n - s0]
            tau = idx / fs - t0
            out[idx] += (
                spec.impulse_amplitude
                * np.exp(-spec.damping * tau)
                * np.sin(2 * np.pi * spec.resonance_freq * tau)
            )

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        out += rng.normal(0.0, spec.noise_sigma, n)
    return SignalSegment(out, fs, spec.label)
