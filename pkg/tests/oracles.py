"""Slow reference implementations used only as test oracles.

They share no code with the package: the filter bank is an explicit
orthogonal matrix and the DFT is a double loop over cos/sin.
"""
import math

import numpy as np


def analysis_matrix(h, g, L):
    """Periodized two-channel analysis operator: rows 0..L/2-1 low, L/2.. high."""
    A = np.zeros((L, L))
    half = L // 2
    for t in range(half):
        for n in range(len(h)):
            A[t, (2 * t - n) % L] += h[n]
            A[half + t, (2 * t - n) % L] += g[n]
    return A


def matrix_wpt(x, h, g, k):
    """Levels of node arrays, each level a list of 1-D arrays in natural order."""
    levels = [[np.asarray(x, dtype=float)]]
    for _ in range(k):
        nxt = []
        for node in levels[-1]:
            L = node.shape[0]
            y = analysis_matrix(h, g, L) @ node
            nxt += [y[: L // 2], y[L // 2 :]]
        levels.append(nxt)
    return levels


def matrix_leaf_waveform(leaf_coeffs, j, h, g, k, N):
    """Invert a tree whose only nonzero node is leaf ``j``, via transposed matrices."""
    cur = np.asarray(leaf_coeffs, dtype=float)
    node = j
    for level in range(k, 0, -1):
        L = cur.shape[0] * 2
        A = analysis_matrix(h, g, L)
        full = np.zeros(L)
        if node % 2 == 0:
            full[: L // 2] = cur
        else:
            full[L // 2 :] = cur
        cur = A.T @ full
        node //= 2
    assert cur.shape[0] == N
    return cur


def naive_dft(x, n_bins=None):
    x = np.asarray(x, dtype=float).tolist()
    N = len(x)
    n_bins = N if n_bins is None else n_bins
    out = np.zeros(n_bins, dtype=complex)
    for kk in range(n_bins):
        re = 0.0
        im = 0.0
        for n in range(N):
            ang = 2.0 * math.pi * ((kk * n) % N) / N
            re += x[n] * math.cos(ang)
            im -= x[n] * math.sin(ang)
        out[kk] = complex(re, im)
    return out


def naive_amplitudes(x):
    N = len(x)
    X = naive_dft(x, N // 2 + 1)
    amps = []
    for j in range(N // 2 + 1):
        scale = 1.0 / N if (j == 0 or (N % 2 == 0 and j == N // 2)) else 2.0 / N
        amps.append(abs(X[j]) * scale)
    return np.array(amps)


def brute_auc(pos_scores, neg_scores):
    """Fraction of (positive, negative) pairs ranked correctly, ties 1/2."""
    total = 0.0
    for p in pos_scores:
        for q in neg_scores:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos_scores) * len(neg_scores))
