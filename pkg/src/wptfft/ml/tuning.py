"""Gaussian-process Bayesian optimisation of forest hyperparameters."""
from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import norm, qmc

from .data import STREAM_FOLD, STREAM_TRIAL, STREAM_TUNER, LabeledDataset, stratified_folds, substream
from .forest import ForestParams, train_forest

log = logging.getLogger(__name__)

NOISE_FLOOR = 1e-6
LENGTH_SCALE_GRID = (0.05, 0.1, 0.2, 0.4, 0.8, 1.6)
N_CANDIDATES = 2048


@dataclass(frozen=True)
class Param:
    name: str
    low: float
    high: float
    integer: bool = True

    def decode(self, u: float):
        v = self.low + float(u) * (self.high - self.low)
        if self.integer:
            return int(min(max(round(v), self.low), self.high))
        return float(v)

    def encode(self, v) -> float:
        if self.high == self.low:
            return 0.0
        return (float(v) - self.low) / (self.high - self.low)


@dataclass(frozen=True)
class HyperparamSpace:
    params: tuple
    budget: int = 15
    cv_folds: int = 5

    def __post_init__(self):
        if not self.params:
            raise ValueError("search space has no parameters")
        for p in self.params:
            if p.high < p.low:
                raise ValueError(f"empty range for {p.name}")
        if self.budget < 2:
            raise ValueError("budget must be >= 2")

    @property
    def dim(self) -> int:
        return len(self.params)

    @property
    def n_initial(self) -> int:
        return max(5, self.dim + 1)

    def decode(self, u) -> dict:
        return {p.name: p.decode(x) for p, x in zip(self.params, u)}


def forest_space(n_features: int, budget: int = 15, cv_folds: int = 5) -> HyperparamSpace:
    return HyperparamSpace(
        (
            Param("n_trees", 10, 300),
            Param("max_depth", 2, 32),
            Param("min_samples_leaf", 1, 16),
            Param("features_per_split", 1, max(1, n_features)),
        ),
        budget=budget,
        cv_folds=cv_folds,
    )


class GaussianProcess:
    """Zero-mean GP with a unit-variance squared-exponential ARD kernel.

    Targets are standardised before fitting. Per-dimension length scales are
    picked from ``LENGTH_SCALE_GRID`` by maximum log marginal likelihood.
    """

    def __init__(self, noise: float = NOISE_FLOOR, grid: Sequence[float] = LENGTH_SCALE_GRID):
        self.noise = noise
        self.grid = tuple(grid)

    @staticmethod
    def _kernel(A, B, ls):
        d = (A[:, None, :] - B[None, :, :]) / ls
        return np.exp(-0.5 * np.sum(d * d, axis=-1))

    def fit(self, X, y) -> "GaussianProcess":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        self.X = X
        self.y_mean = y.mean()
        self.y_std = y.std() if y.std() > 0 else 1.0
        z = (y - self.y_mean) / self.y_std
        n, d = X.shape
        sq = (X[:, None, :] - X[None, :, :]) ** 2  # (n, n, d)
        combos = np.array(list(itertools.product(self.grid, repeat=d)))  # (G, d)
        K = np.exp(-0.5 * np.einsum("ijd,gd->gij", sq, 1.0 / combos**2))
        K += self.noise * np.eye(n)
        L = np.linalg.cholesky(K)
        alpha = np.linalg.solve(L, np.broadcast_to(z, (len(combos), n))[..., None])[..., 0]
        lml = -0.5 * np.sum(alpha * alpha, axis=1) - np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1)
        best = int(np.argmax(lml))
        self.length_scales = combos[best]
        self.L = L[best]
        self.alpha = np.linalg.solve(self.L.T, np.linalg.solve(self.L, z))
        return self

    def predict(self, Xs):
        """Posterior mean and standard deviation in the original target units."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=np.float64))
        Ks = self._kernel(Xs, self.X, self.length_scales)
        mu = Ks @ self.alpha
        v = np.linalg.solve(self.L, Ks.T)
        var = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)
        return self.y_mean + self.y_std * mu, self.y_std * np.sqrt(var)


def expected_improvement(mu, sigma, best, xi: float = 0.0):
    mu = np.asarray(mu)
    sigma = np.asarray(sigma)
    imp = mu - best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / sigma, 0.0)
    ei = imp * norm.cdf(z) + sigma * norm.pdf(z)
    return np.where(sigma > 0, ei, np.maximum(imp, 0.0))


@dataclass
class Trial:
    index: int
    params: dict
    value: float
    source: str  # "initial" or "ei"


@dataclass
class TuningResult:
    best_params: dict
    best_value: float
    trials: list = field(default_factory=list)
    flat: bool = False

    def log_lines(self) -> list[str]:
        names = list(self.trials[0].params) if self.trials else []
        out = ["trial,source," + ",".join(names) + ",objective"]
        for t in self.trials:
            vals = ",".join(repr(t.params[n]) for n in names)
            out.append(f"{t.index},{t.source},{vals},{t.value:.17g}")
        return out


def cv_accuracy_objective(train: LabeledDataset, n_folds: int = 5, seed: int = 0) -> Callable:
    """Mean stratified ``n_folds``-fold CV accuracy of a forest, as ``f(params, trial)``."""
    folds = stratified_folds(train.labels, n_folds, substream(seed, STREAM_FOLD))
    n = len(train)

    def objective(params: dict, trial: int) -> float:
        fp = ForestParams(**params)
        scores = []
        for j, test_idx in enumerate(folds):
            mask = np.ones(n, dtype=bool)
            mask[test_idx] = False
            fold_seed = int(substream(seed, STREAM_FOLD, trial, j).integers(2**63))
            model = train_forest(train.subset(np.flatnonzero(mask)), fp, fold_seed)
            pred = model.predict_labels(train.features[test_idx])
            scores.append(np.mean(pred == train.labels[test_idx]))
        return float(np.mean(scores))

    return objective


def tune_bayesian(
    train: Optional[LabeledDataset],
    space: HyperparamSpace,
    seed: int = 0,
    objective: Optional[Callable] = None,
) -> TuningResult:
    """Maximise ``objective`` over ``space`` with GP-EI.

    The first ``space.n_initial`` trials come from a scrambled Halton design;
    the rest maximise expected improvement over ``N_CANDIDATES`` random
    points. ``objective(params, trial_index)`` defaults to CV accuracy of a
    forest on ``train``. Identical decoded configurations are evaluated once.
    """
    if space.budget < 2 + space.dim and space.budget < space.n_initial:
        raise ValueError(f"budget {space.budget} is below 2 + dim = {2 + space.dim}")
    if objective is None:
        if train is None:
            raise ValueError("either train data or an objective is required")
        objective = cv_accuracy_objective(train, space.cv_folds, seed)

    cache: dict = {}
    U, values, trials = [], [], []

    def run(u, source):
        params = space.decode(u)
        key = tuple(params.values())
        if key not in cache:
            cache[key] = float(objective(params, len(trials)))
        value = cache[key]
        U.append(np.asarray(u, dtype=np.float64))
        values.append(value)
        trials.append(Trial(len(trials), params, value, source))
        log.debug("trial %d (%s): %s -> %.6g", len(trials) - 1, source, params, value)

    n_init = min(space.n_initial, space.budget)
    halton = qmc.Halton(space.dim, scramble=True, seed=substream(seed, STREAM_TUNER))
    for u in halton.random(n_init):
        run(u, "initial")

    gp = GaussianProcess()
    while len(trials) < space.budget:
        y = np.asarray(values)
        gp.fit(np.stack(U), y)
        rng = substream(seed, STREAM_TRIAL, len(trials))
        cand = rng.random((N_CANDIDATES, space.dim))
        mu, sd = gp.predict(cand)
        ei = expected_improvement(mu, sd, y.max())
        run(cand[int(np.argmax(ei))], "ei")

    y = np.asarray(values)
    flat = bool(np.all(y == y[0]))
    if flat:
        warnings.warn("all tuning trials scored the same; returning the first trial")
    best = int(np.argmax(y))
    return TuningResult(dict(trials[best].params), float(y[best]), trials, flat)
