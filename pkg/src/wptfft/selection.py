"""Base-wavelet and decomposition-level selection by energy-to-entropy ratio.

For an orthonormal periodized transform the pooled energy of a level equals
the signal energy at every level (Parseval), so comparing levels of one
wavelet is decided by the entropy term alone: the level whose coefficients
concentrate the energy into the fewest entries wins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .wavelets import wavelet_filters
from .wpt import level_coefficients, wpt_decompose


@dataclass(frozen=True)
class SelectionScore:
    wavelet: str
    level: int
    energy: float
    entropy: float
    ratio: float
    concentrated: bool = False  # zero entropy; ratio is +inf


def coefficient_energy(coeffs) -> float:
    w = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if w.size == 0:
        raise ValueError("energy of an empty coefficient set is undefined")
    return float(np.dot(w, w))


def coefficient_entropy(coeffs) -> float:
    """Shannon entropy (bits) of the normalised energy distribution."""
    w = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    sq = w * w
    energy = sq.sum()
    if not energy > 0:
        raise ValueError("entropy undefined for zero energy")
    p = sq[sq > 0] / energy
    h = -float(np.sum(p * np.log2(p)))
    return max(h, 0.0)


def energy_entropy_ratio(coeffs) -> tuple[float, bool]:
    """``(energy / entropy, concentrated)``; zero entropy gives ``(inf, True)``."""
    e = coefficient_energy(coeffs)
    h = coefficient_entropy(coeffs)
    if h == 0.0:
        return math.inf, True
    return e / h, False


def score_table(segment, candidates: Sequence[str], k_max: int) -> list[SelectionScore]:
    """One score per (wavelet, level) with level-``i`` nodes pooled together."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    rows = []
    for name in candidates:
        pair = wavelet_filters(name)
        tree = wpt_decompose(segment, k_max, pair)
        for i in range(1, k_max + 1):
            w = level_coefficients(tree, i)
            e = coefficient_energy(w)
            h = coefficient_entropy(w)
            ratio, flag = energy_entropy_ratio(w)
            rows.append(SelectionScore(pair.name, i, e, h, ratio, flag))
    return rows


TIE_RTOL = 1e-9


def _ties(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= TIE_RTOL * max(abs(a), abs(b))


def _best(rows: Sequence[SelectionScore], ratios: Sequence[float], order: dict) -> SelectionScore:
    # ratios equal up to rounding are ties: smaller level first, then candidate order
    best_i = 0
    for i in range(1, len(rows)):
        a, b = ratios[i], ratios[best_i]
        ka = (rows[i].level, order[rows[i].wavelet])
        kb = (rows[best_i].level, order[rows[best_i].wavelet])
        if _ties(a, b):
            if ka < kb:
                best_i = i
        elif a > b:
            best_i = i
    return rows[best_i]


def select_wavelet_and_level(segment, candidates: Sequence[str] = ("db1", "db2", "db4", "db8"), k_max: int = 3):
    """Return ``((wavelet, level), table)`` maximising the energy-to-entropy ratio."""
    rows = score_table(segment, candidates, k_max)
    order = {wavelet_filters(c).name: i for i, c in enumerate(candidates)}
    best = _best(rows, [r.ratio for r in rows], order)
    return (best.wavelet, best.level), rows


def select_over_segments(segments, candidates: Sequence[str] = ("db1", "db2", "db4", "db8"), k_max: int = 3):
    """Argmax of the mean ratio across several segments of one recording.

    Returns ``((wavelet, level), mean_table)`` where each row carries the
    mean energy, entropy and ratio over the segments.
    """
    tables = [score_table(s, candidates, k_max) for s in segments]
    if not tables:
        raise ValueError("no segments given")
    mean_rows = []
    for j, first in enumerate(tables[0]):
        col = [t[j] for t in tables]
        ratio = float(np.mean([r.ratio for r in col]))
        mean_rows.append(
            SelectionScore(
                first.wavelet,
                first.level,
                float(np.mean([r.energy for r in col])),
                float(np.mean([r.entropy for r in col])),
                ratio,
                math.isinf(ratio),
            )
        )
    order = {wavelet_filters(c).name: i for i, c in enumerate(candidates)}
    best = _best(mean_rows, [r.ratio for r in mean_rows], order)
    return (best.wavelet, best.level), mean_rows
