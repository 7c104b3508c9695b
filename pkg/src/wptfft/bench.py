"""System-delay model and online processing-time measurement.

The delay of one diagnosis is the acquisition time of the input segment
plus the time to turn it into a prediction::

    tau_d = N_o / f_s + T_p

``T_p`` covers feature extraction and classification with the model
already in memory; model loading and file I/O are excluded.
"""
from __future__ import annotations

import logging
import os
import platform
import time
import tracemalloc
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .features import extract_feature_matrix, extract_features, feature_size
from .ml.data import LabeledDataset
from .ml.forest import ForestModel, ForestParams, check_metadata, predict, train_forest
from .signal import SignalSegment, segment_duration, segment_signal

log = logging.getLogger(__name__)

MIN_REPS = 5


@dataclass(frozen=True)
class TimingStats:
    median: float
    p95: float
    mean: float
    min: float
    max: float
    reps: int
    clock_resolution: float
    coarse_clock: bool = False
    peak_memory_bytes: Optional[int] = None
    stage_medians: Optional[dict] = None


def _stats(samples: np.ndarray, resolution: float, **extra) -> TimingStats:
    med = float(np.median(samples))
    coarse = resolution >= 1e-3 or resolution > 0.01 * med
    return TimingStats(
        median=med,
        p95=float(np.percentile(samples, 95)),
        mean=float(np.mean(samples)),
        min=float(np.min(samples)),
        max=float(np.max(samples)),
        reps=int(samples.shape[0]),
        clock_resolution=resolution,
        coarse_clock=bool(coarse),
        **extra,
    )


def measure_processing_time(
    model: ForestModel,
    segment: SignalSegment,
    k: int,
    m: int,
    wavelet="db4",
    warmup: int = 5,
    reps: int = 50,
    pad: bool = False,
    per_stage: bool = False,
    track_memory: bool = True,
) -> TimingStats:
    """Time feature extraction + prediction of one segment ``reps`` times.

    Uses ``time.perf_counter_ns``. Peak traced allocation is sampled in a
    separate untimed run so tracing never inflates the timings.
    """
    if reps < MIN_REPS:
        raise ValueError(f"reps must be >= {MIN_REPS}, got {reps}")
    check_metadata(model, {"k": k, "m": m, "wavelet": wavelet})

    def pipeline():
        return predict(model, extract_features(segment, k, m, wavelet, pad=pad))

    for _ in range(max(warmup, 0)):
        pipeline()
    clock = time.perf_counter_ns
    samples = np.empty(reps)
    for i in range(reps):
        t0 = clock()
        pipeline()
        samples[i] = (clock() - t0) * 1e-9

    peak = None
    if track_memory:
        tracemalloc.start()
        try:
            pipeline()
            peak = tracemalloc.get_traced_memory()[1]
        finally:
            tracemalloc.stop()

    stages = None
    if per_stage:
        fe, pr = np.empty(reps), np.empty(reps)
        for i in range(reps):
            t0 = clock()
            fv = extract_features(segment, k, m, wavelet, pad=pad)
            t1 = clock()
            predict(model, fv)
            t2 = clock()
            fe[i], pr[i] = (t1 - t0) * 1e-9, (t2 - t1) * 1e-9
        stages = {"features": float(np.median(fe)), "predict": float(np.median(pr))}

    res = time.get_clock_info("perf_counter").resolution
    return _stats(samples, res, peak_memory_bytes=peak, stage_medians=stages)


def system_delay(n_samples: int, sample_rate: float, tp_median: float) -> float:
    """``N_o / f_s + T_p``."""
    return segment_duration(n_samples, sample_rate) + tp_median


@dataclass(frozen=True)
class DelayRow:
    n_o: int
    t_vin: float
    k: int
    m: int
    s: int
    tp: TimingStats

    @property
    def tau_d(self) -> float:
        return self.t_vin + self.tp.median


CSV_COLUMNS = ("N_o", "T_vin_s", "k", "m", "S", "Tp_median_s", "Tp_mean_s", "Tp_p95_s", "tau_d_s")


def environment_descriptor() -> str:
    return (
        f"{platform.platform()}; cpu={platform.processor() or platform.machine()}; "
        f"cores={os.cpu_count()}; python={platform.python_version()}; numpy={np.__version__}"
    )


@dataclass
class DelayReport:
    rows: list = field(default_factory=list)
    environment: str = ""
    sample_rate: float = 0.0
    skipped: list = field(default_factory=list)

    def by_t_vin(self) -> dict:
        """Mean tau_d per segment duration, averaged over feature sizes."""
        return _group_mean(self.rows, lambda r: r.t_vin)

    def by_size(self) -> dict:
        """Mean tau_d per feature-vector size, averaged over segment durations."""
        return _group_mean(self.rows, lambda r: r.s)

    def by_size_and_t_vin(self) -> dict:
        return _group_mean(self.rows, lambda r: (r.s, r.t_vin))

    def to_csv(self) -> str:
        lines = [f"# environment: {self.environment}", f"# fs={self.sample_rate:.17g}"]
        for reason in self.skipped:
            lines.append(f"# skipped: {reason}")
        lines.append(",".join(CSV_COLUMNS))
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        str(r.n_o),
                        f"{r.t_vin:.17g}",
                        str(r.k),
                        str(r.m),
                        str(r.s),
                        f"{r.tp.median:.17g}",
                        f"{r.tp.mean:.17g}",
                        f"{r.tp.p95:.17g}",
                        f"{r.tau_d:.17g}",
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def averaged_csv(self) -> str:
        lines = ["view,key,tau_d_mean_s"]
        for key, v in self.by_t_vin().items():
            lines.append(f"T_vin_s,{key:.17g},{v:.17g}")
        for key, v in self.by_size().items():
            lines.append(f"S,{key},{v:.17g}")
        return "\n".join(lines) + "\n"


def _group_mean(rows, key) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r.tau_d)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


# Default delay-benchmark sweep: 4 segment lengths x 3 depths x 3 peak counts.
STANDARD_GRID = [
    (n_o, k, m) for n_o in (300, 600, 1200, 2400) for k in (2, 3, 5) for m in (1, 2, 3)
]


def delay_sweep(
    grid: Iterable[tuple[int, int, int]],
    signals: Mapping[str, np.ndarray],
    sample_rate: float,
    wavelet="db4",
    forest_params: ForestParams = ForestParams(n_trees=20),
    segments_per_class: int = 40,
    warmup: int = 3,
    reps: int = 20,
    seed: int = 0,
    pad: bool = False,
    models: Optional[dict] = None,
    environment: Optional[str] = None,
) -> DelayReport:
    """Measure tau_d for every ``(N_o, k, m)`` cell of ``grid``.

    ``signals`` maps class labels to long recordings. Each cell segments
    them, extracts features, trains a forest (or reuses ``models[(N_o, k,
    m)]``) and times one segment. Cells where ``2**k`` does not divide
    ``N_o`` are skipped with a logged reason unless ``pad=True``. Cells run
    strictly one after another.
    """
    report = DelayReport(environment=environment or environment_descriptor(), sample_rate=float(sample_rate))
    for n_o, k, m in grid:
        if n_o % (1 << k) and not pad:
            reason = f"N_o={n_o} k={k} m={m}: 2**{k} does not divide {n_o}"
            log.info("skipping cell %s", reason)
            report.skipped.append(reason)
            continue
        model = (models or {}).get((n_o, k, m))
        per_class = {
            label: segment_signal(signals[label], sample_rate, n_o)[:segments_per_class]
            for label in sorted(signals)
        }
        probe = next(iter(per_class.values()))[0]
        if model is None:
            feats, labels = [], []
            for label, segs in per_class.items():
                feats.append(extract_feature_matrix(segs, k, m, wavelet, pad=pad))
                labels += [label] * len(segs)
            meta = {"k": k, "m": m, "wavelet": str(wavelet), "fs": sample_rate, "window": n_o}
            model = train_forest(LabeledDataset(np.vstack(feats), labels, meta), forest_params, seed)
            if models is not None:
                models[(n_o, k, m)] = model
        tp = measure_processing_time(model, probe, k, m, wavelet, warmup=warmup, reps=reps, pad=pad)
        report.rows.append(
            DelayRow(n_o, segment_duration(n_o, sample_rate), k, m, feature_size(k, m), tp)
        )
    return report


def count_inversions(values: Sequence[float]) -> int:
    """Number of adjacent decreases in ``values``."""
    v = np.asarray(values, dtype=np.float64)
    return int(np.sum(np.diff(v) < 0))


def delay_growth(report: DelayReport) -> tuple[float, float]:
    """Relative tau_d growth across the T_vin sweep and across the S sweep."""
    tv = report.by_t_vin()
    sz = report.by_size()
    t_keys = sorted(tv)
    s_keys = sorted(sz)
    g_t = (tv[t_keys[-1]] - tv[t_keys[0]]) / tv[t_keys[0]]
    g_s = (sz[s_keys[-1]] - sz[s_keys[0]]) / sz[s_keys[0]]
    return g_t, g_s


@dataclass(frozen=True)
class ComplexityFit:
    slope: float
    in_band: bool
    lengths: tuple
    medians: tuple


def complexity_slope(
    lengths: Sequence[int],
    k: int,
    m: int,
    wavelet="db4",
    sample_rate: float = 12000.0,
    reps: int = 20,
    seed: int = 0,
    band: tuple[float, float] = (0.7, 1.6),
) -> ComplexityFit:
    """Log-log slope of median feature-extraction time against ``N_o``.

    The O(N log N) analysis predicts a slope a little above 1; ``in_band``
    reports whether the fitted slope lies in ``band``. Small inputs are
    dominated by fixed per-call overhead, so this is a soft check.
    """
    rng = np.random.default_rng(seed)
    meds = []
    for n in lengths:
        seg = SignalSegment(rng.normal(size=n), sample_rate)
        for _ in range(3):
            extract_features(seg, k, m, wavelet)
        t = np.empty(reps)
        for i in range(reps):
            t0 = time.perf_counter_ns()
            extract_features(seg, k, m, wavelet)
            t[i] = (time.perf_counter_ns() - t0) * 1e-9
        meds.append(float(np.median(t)))
    slope = float(np.polyfit(np.log(lengths), np.log(meds), 1)[0])
    return ComplexityFit(slope, band[0] <= slope <= band[1], tuple(lengths), tuple(meds))


def write_report(report: DelayReport, path: Path, averaged_path: Optional[Path] = None) -> None:
    Path(path).write_text(report.to_csv())
    if averaged_path is not None:
        Path(averaged_path).write_text(report.averaged_csv())
