"""Periodized wavelet packet decomposition and leaf-waveform reconstruction.

Each split convolves a node with the analysis filter under circular
extension and keeps every second output::

    low[t]  = sum_n h[n] * x[(2t - n) mod L]
    high[t] = sum_n g[n] * x[(2t - n) mod L]

With an orthonormal filter pair this is an orthogonal change of basis, so
energy is preserved at every level and the inverse is the transpose.
Nodes are kept in natural (Paley) order: the children of node ``s`` are
``2s`` (low-pass) and ``2s + 1`` (high-pass).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import SignalSegment
from .wavelets import WaveletFilterPair, wavelet_filters


@dataclass(frozen=True)
class PacketTree:
    """Coefficients of every node down to ``level``.

    ``nodes[i]`` is an array of shape ``(2**i, original_length // 2**i)``
    whose row ``s`` holds node ``(i, s)``; ``nodes[0][0]`` is the input.
    """

    level: int
    nodes: tuple
    wavelet: str
    original_length: int

    def node(self, level: int, index: int) -> np.ndarray:
        return self.nodes[level][index]

    @property
    def leaves(self) -> np.ndarray:
        return self.nodes[self.level]


def _analysis_step(x: np.ndarray, pair: WaveletFilterPair) -> np.ndarray:
    """Split every row of ``x`` into interleaved (low, high) children."""
    B, L = x.shape
    half = L // 2
    t2 = 2 * np.arange(half)
    low = np.zeros((B, half))
    high = np.zeros((B, half))
    for n, (hn, gn) in enumerate(zip(pair.h, pair.g)):
        xs = x[:, (t2 - n) % L]
        low += hn * xs
        high += gn * xs
    out = np.empty((2 * B, half))
    out[0::2] = low
    out[1::2] = high
    return out


def _synthesis_step(low: np.ndarray, high: np.ndarray | None, pair: WaveletFilterPair) -> np.ndarray:
    """Adjoint of one split; ``high=None`` treats the high-pass child as zero."""
    B, half = low.shape
    L = 2 * half
    t2 = 2 * np.arange(half)
    out = np.zeros((B, L))
    for n in range(pair.length):
        idx = (t2 - n) % L  # injective for fixed n
        contrib = pair.h[n] * low
        if high is not None:
            contrib = contrib + pair.g[n] * high
        out[:, idx] += contrib
    return out


def _check_divisible(n: int, k: int) -> None:
    if k < 1:
        raise ValueError(f"decomposition level must be >= 1, got {k}")
    if n % (1 << k):
        raise ValueError(
            f"segment length {n} must be divisible by 2**k = {1 << k} for a "
            f"level-{k} decomposition"
        )


def wpt_decompose(segment, k: int, wavelet="db4") -> PacketTree:
    """Full binary wavelet packet tree of ``segment`` to level ``k``."""
    pair = wavelet_filters(wavelet)
    x = segment.samples if isinstance(segment, SignalSegment) else np.asarray(segment, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    _check_divisible(x.shape[0], k)
    levels = [x[None, :].copy()]
    for _ in range(k):
        levels.append(_analysis_step(levels[-1], pair))
    for arr in levels:
        arr.setflags(write=False)
    return PacketTree(k, tuple(levels), pair.name, x.shape[0])


def wpt_reconstruct(leaves: np.ndarray, wavelet="db4") -> np.ndarray:
    """Inverse transform from a full set of level-k leaves (shape ``(2**k, n)``)."""
    pair = wavelet_filters(wavelet)
    cur = np.asarray(leaves, dtype=np.float64)
    if cur.ndim != 2 or cur.shape[0] & (cur.shape[0] - 1):
        raise ValueError("leaves must be a (2**k, n) array")
    while cur.shape[0] > 1:
        cur = _synthesis_step(cur[0::2], cur[1::2], pair)
    return cur[0]


def synthesize_nodes(coeffs: np.ndarray, level: int, indices, wavelet="db4") -> np.ndarray:
    """Time-domain waveforms of single nodes, every other node zeroed.

    ``coeffs`` has one row per entry of ``indices``; row ``r`` is placed at
    node ``(level, indices[r])`` and inverted alone. Zero nodes contribute
    nothing to the inverse, so only the path to the root is evaluated.
    """
    pair = wavelet_filters(wavelet)
    cur = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if idx.shape[0] != cur.shape[0]:
        raise ValueError("one node index is required per coefficient row")
    if np.any(idx < 0) or np.any(idx >= (1 << level)):
        raise ValueError(f"node index out of range for level {level}")
    hg = np.stack([pair.h, pair.g])
    for i in range(level, 0, -1):
        bit = (idx >> (level - i)) & 1
        filt = hg[bit]  # (rows, taps)
        B, half = cur.shape
        L = 2 * half
        t2 = 2 * np.arange(half)
        up = np.zeros((B, L))
        for n in range(pair.length):
            up[:, (t2 - n) % L] += filt[:, n : n + 1] * cur
        cur = up
    return cur


def reconstruct_leaves(tree: PacketTree) -> np.ndarray:
    """The ``2**k`` elementary waveforms of ``tree`` in natural order.

    Row ``j`` is the inverse transform of the tree with every leaf except
    ``j`` set to zero; the rows sum to the original segment.
    """
    k = tree.level
    leaves = tree.leaves
    if leaves.shape != (1 << k, tree.original_length >> k):
        raise ValueError("malformed packet tree")
    return synthesize_nodes(leaves, k, np.arange(1 << k), tree.wavelet)


def synthesis_atom(n: int, level: int, node: int, position: int, wavelet="db4") -> np.ndarray:
    """Waveform of a unit coefficient at ``position`` of node ``(level, node)``."""
    _check_divisible(n, level)
    c = np.zeros((1, n >> level))
    c[0, position] = 1.0
    return synthesize_nodes(c, level, [node], wavelet)[0]


def gray_code(b):
    return b ^ (b >> 1)


def frequency_order(k: int) -> np.ndarray:
    """Natural node indices of level ``k`` sorted by ascending frequency band.

    The high-pass branch mirrors the spectrum of its parent, so band ``b``
    lives in natural node ``gray_code(b)``.
    """
    return gray_code(np.arange(1 << k))


def level_coefficients(tree: PacketTree, level: int) -> np.ndarray:
    """All node coefficients at ``level`` pooled into one flat array."""
    return tree.nodes[level].reshape(-1)
