"""Orthonormal Daubechies filter pairs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Extremal-phase Daubechies scaling filters, normalised to sum sqrt(2).
# dbN has 2N taps and N vanishing moments.
_DAUBECHIES = {
    "db1": (
        0.70710678118654752440,
        0.70710678118654752440,
    ),
    "db2": (
        0.48296291314453414337,
        0.83651630373780790558,
        0.22414386804201338103,
        -0.12940952255126038117,
    ),
    "db4": (
        0.23037781330889650086,
        0.71484657055291564709,
        0.63088076792985890788,
        -0.027983769416859854211,
        -0.18703481171909308408,
        0.030841381835560763627,
        0.032883011666885199735,
        -0.010597401785069032105,
    ),
    "db8": (
        0.054415842243104009955,
        0.31287159091429997066,
        0.67563073629728980681,
        0.58535468365420671277,
        -0.015829105256349305667,
        -0.28401554296154692652,
        0.00047248457391328277036,
        0.12874742662047845886,
        -0.01736930100180754617,
        -0.044088253930794751507,
        0.013981027917398281649,
        0.0087460940474057767164,
        -0.0048703529934515743104,
        -0.0003917403733769470463,
        0.00067544940645056936637,
        -0.00011747678412476953373,
    ),
}

_ALIASES = {"haar": "db1"}

SUPPORTED_WAVELETS = tuple(_DAUBECHIES)


@dataclass(frozen=True)
class WaveletFilterPair:
    """Analysis low-pass ``h`` and high-pass ``g`` of an orthonormal wavelet."""

    name: str
    h: np.ndarray
    g: np.ndarray

    @property
    def length(self) -> int:
        return self.h.shape[0]


def quadrature_mirror(h: np.ndarray) -> np.ndarray:
    """High-pass partner ``g[n] = (-1)**n * h[L-1-n]``."""
    h = np.asarray(h, dtype=np.float64)
    sign = np.where(np.arange(h.shape[0]) % 2 == 0, 1.0, -1.0)
    return sign * h[::-1]


def wavelet_filters(name: str | WaveletFilterPair) -> WaveletFilterPair:
    """Look up a filter pair by name (``db1``/``haar``, ``db2``, ``db4``, ``db8``)."""
    if isinstance(name, WaveletFilterPair):
        return name
    key = _ALIASES.get(str(name).lower(), str(name).lower())
    if key not in _DAUBECHIES:
        raise ValueError(
            f"unknown wavelet {name!r}; supported: {', '.join(SUPPORTED_WAVELETS)}"
        )
    h = np.array(_DAUBECHIES[key], dtype=np.float64)
    g = quadrature_mirror(h)
    h.setflags(write=False)
    g.setflags(write=False)
    return WaveletFilterPair(key, h, g)


def check_orthonormal(pair: WaveletFilterPair, tol: float = 1e-10) -> None:
    """Raise ``ValueError`` if ``pair`` is not an orthonormal QMF pair."""
    h, g = pair.h, pair.g
    L = h.shape[0]
    if g.shape[0] != L or L % 2:
        raise ValueError("h and g must have equal, even length")
    if abs(h.sum() - math.sqrt(2.0)) > tol:
        raise ValueError(f"sum(h) = {h.sum()!r}, expected sqrt(2)")
    if abs(np.dot(h, h) - 1.0) > tol:
        raise ValueError(f"sum(h^2) = {np.dot(h, h)!r}, expected 1")
    if np.max(np.abs(g - quadrature_mirror(h))) > tol:
        raise ValueError("g is not the quadrature mirror of h")
    for j in range(1, L // 2):
        if abs(np.dot(h[: L - 2 * j], h[2 * j :])) > tol:
            raise ValueError(f"h is not orthogonal to its shift by {2 * j}")
