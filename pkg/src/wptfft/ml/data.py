"""Labelled feature datasets, stratified splits and seed substreams."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Fixed first element of every spawn key, one per consumer of randomness.
STREAM_TREE = 0
STREAM_FOLD = 1
STREAM_TRIAL = 2
STREAM_SPLIT = 3
STREAM_TUNER = 4


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key)``.

    Work items draw from their own substream (tree ``i`` uses
    ``(STREAM_TREE, i)``, CV fold ``j`` of trial ``t`` uses
    ``(STREAM_FOLD, t, j)`` ...), so results do not depend on how many
    items exist or in which order they run.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray([str(v) for v in np.asarray(self.labels).reshape(-1)], dtype=object)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels.tolist()))

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], dict(self.metadata))


def split_dataset(dataset: LabeledDataset, train_fraction: float = 0.8, seed: int = 0):
    """Stratified ``(train, test)`` split; each class contributes ``round(fraction * n_c)`` to train."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    rng = substream(seed, STREAM_SPLIT)
    train_idx, test_idx = [], []
    for c in dataset.classes:
        idx = np.flatnonzero(dataset.labels == c)
        if idx.shape[0] < 2:
            raise ValueError(f"class {c!r} has fewer than 2 samples; cannot split")
        n_train = int(np.floor(train_fraction * idx.shape[0] + 0.5))
        n_train = min(max(n_train, 1), idx.shape[0] - 1)
        perm = rng.permutation(idx)
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return dataset.subset(train), dataset.subset(test)


def stratified_folds(labels, n_folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Indices of ``n_folds`` test folds, each class dealt round-robin after shuffling."""
    labels = np.asarray(labels)
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    folds = [[] for _ in range(n_folds)]
    offset = 0
    for c in sorted(set(labels.tolist())):
        idx = rng.permutation(np.flatnonzero(labels == c))
        for j, i in enumerate(idx):
            folds[(offset + j) % n_folds].append(i)
        offset += idx.shape[0]
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]
