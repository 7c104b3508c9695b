"""Bagged Gini decision trees.

Splits are axis-aligned ``x[f] <= threshold`` tests. The threshold is the
largest training value that goes left, so any strictly increasing
per-column transform of the data yields the same tree structure and the
same prediction path for every input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .data import STREAM_TREE, LabeledDataset, substream


class MetadataMismatchError(ValueError):
    """Features were produced with settings the model was not trained on."""


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 32
    min_samples_leaf: int = 1
    features_per_split: Optional[int] = None  # None: ceil(sqrt(S))

    def resolved_features(self, n_features: int) -> int:
        if self.features_per_split is None:
            return max(1, math.ceil(math.sqrt(n_features)))
        return int(min(max(self.features_per_split, 1), n_features))


@dataclass
class Tree:
    """Flat pre-order tree. ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) class histogram, all nodes

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            f = self.feature[node]
            go_left = X[rows, np.where(active, f, 0)] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(active, nxt, node)
            active = self.feature[node] >= 0
        return node

    def leaf_proba(self) -> np.ndarray:
        c = self.counts.astype(np.float64)
        tot = c.sum(axis=1, keepdims=True)
        return c / np.where(tot == 0, 1.0, tot)


class _Builder:
    def __init__(self, X, y, n_classes, params: ForestParams, rng):
        self.X = X
        self.y = y
        self.C = n_classes
        self.max_depth = params.max_depth
        self.msl = params.min_samples_leaf
        self.n_try = params.resolved_features(X.shape[1])
        self.rng = rng
        self.eye = np.eye(n_classes, dtype=np.int64)
        self.feature, self.threshold, self.left, self.right, self.counts = [], [], [], [], []

    def _new_node(self, counts):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(counts)
        return len(self.feature) - 1

    def _best_split(self, idx):
        """Best (feature, threshold, left_mask) or None.

        Features are visited in a random order until ``n_try`` non-constant
        ones have been scored; ties keep the first visited feature and the
        lowest threshold.
        """
        n = idx.shape[0]
        Xn = self.X[idx]
        yn = self.y[idx]
        order_f = self.rng.permutation(self.X.shape[1])
        col_min = Xn.min(axis=0)
        col_max = Xn.max(axis=0)
        varying = order_f[col_max[order_f] > col_min[order_f]]
        feats = varying[: self.n_try]
        if feats.size == 0:
            return None
        Xs_all = Xn[:, feats]
        order = np.argsort(Xs_all, axis=0, kind="stable")
        Xs = np.take_along_axis(Xs_all, order, axis=0)
        onehot = self.eye[yn[order]]  # (n, F, C)
        cl = np.cumsum(onehot, axis=0)[:-1]  # split after row i
        total = cl[-1] + onehot[-1]
        cr = total - cl
        nl = np.arange(1, n, dtype=np.float64)[:, None]
        nr = n - nl
        score = (cl * cl).sum(axis=2) / nl + (cr * cr).sum(axis=2) / nr
        valid = (Xs[:-1] < Xs[1:]) & (nl >= self.msl) & (nr >= self.msl)
        if not valid.any():
            return None
        score = np.where(valid, score, -np.inf)
        flat = np.argmax(score.T)  # feature-major: first feature, then lowest position
        j, pos = divmod(int(flat), n - 1)
        f = int(feats[j])
        thr = float(Xs[pos, j])
        return f, thr, Xn[:, f] <= thr

    def grow(self, idx, depth):
        counts = np.bincount(self.y[idx], minlength=self.C)
        node = self._new_node(counts)
        n = idx.shape[0]
        if depth >= self.max_depth or n < 2 * self.msl or np.count_nonzero(counts) <= 1:
            return node
        split = self._best_split(idx)
        if split is None:
            return node
        f, thr, mask = split
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.grow(idx[mask], depth + 1)
        self.right[node] = self.grow(idx[~mask], depth + 1)
        return node

    def tree(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.counts, dtype=np.int64).reshape(-1, self.C),
        )


def fit_tree(X, y, n_classes, params: ForestParams, rng, bootstrap: bool = True) -> Tree:
    """One tree on a bootstrap resample (``n`` draws with replacement) of ``(X, y)``."""
    n = X.shape[0]
    idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
    b = _Builder(X[idx], y[idx], n_classes, params, rng)
    b.grow(np.arange(n), 0)
    return b.tree()


@dataclass
class ForestModel:
    trees: list
    classes: list
    params: ForestParams
    seed: int
    n_features: int
    metadata: dict = field(default_factory=dict)

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise MetadataMismatchError(
                f"model expects {self.n_features} features, got {X.shape[1]}"
            )
        proba = np.zeros((X.shape[0], len(self.classes)))
        for t in self.trees:
            proba += t.leaf_proba()[t.apply(X)]
        return proba / len(self.trees)

    def predict_index(self, X) -> np.ndarray:
        # argmax returns the lowest index among ties
        return np.argmax(self.predict_proba(X), axis=1)

    def predict_labels(self, X) -> np.ndarray:
        return np.asarray(self.classes, dtype=object)[self.predict_index(X)]


def train_forest(train: LabeledDataset, params: ForestParams = ForestParams(), seed: int = 0) -> ForestModel:
    """Fit ``params.n_trees`` trees; tree ``i`` draws from substream ``(seed, tree, i)``."""
    classes = train.classes
    if len(classes) < 2:
        raise ValueError("training data needs at least 2 distinct classes")
    lookup = {c: i for i, c in enumerate(classes)}
    y = np.array([lookup[v] for v in train.labels], dtype=np.int64)
    X = train.features
    trees = [
        fit_tree(X, y, len(classes), params, substream(seed, STREAM_TREE, i))
        for i in range(params.n_trees)
    ]
    return ForestModel(trees, classes, params, int(seed), X.shape[1], dict(train.metadata))


_CHECKED_KEYS = ("k", "m", "wavelet")


def check_metadata(model: ForestModel, metadata: dict) -> None:
    for key in _CHECKED_KEYS:
        if key in model.metadata and key in metadata:
            if str(model.metadata[key]) != str(metadata[key]):
                raise MetadataMismatchError(
                    f"feature {key}={metadata[key]!r} does not match model {key}={model.metadata[key]!r}"
                )


def predict(model: ForestModel, features, metadata: Optional[dict] = None):
    """Class label and per-class probabilities for one feature vector.

    ``features`` may be a :class:`~wptfft.features.FeatureVector`, whose
    ``(k, m, wavelet)`` are checked against the model before predicting.
    """
    if hasattr(features, "values") and hasattr(features, "k"):
        meta = {"k": features.k, "m": features.m, "wavelet": features.wavelet}
        meta.update(metadata or {})
        metadata = meta
        features = features.values
    if metadata:
        check_metadata(model, metadata)
    proba = model.predict_proba(np.asarray(features, dtype=np.float64).reshape(1, -1))[0]
    return model.classes[int(np.argmax(proba))], proba


def params_dict(params: ForestParams) -> dict:
    return asdict(params)
