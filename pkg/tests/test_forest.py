import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wptfft.features import extract_features
from wptfft.io import model_to_text
from wptfft.ml import ForestParams, LabeledDataset, MetadataMismatchError, predict, split_dataset, train_forest
from wptfft.ml.forest import ForestModel, Tree, fit_tree
from wptfft.signal import SignalSegment


def _leaf(counts):
    return Tree(
        np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([counts])
    )


def _stump(feature, thr, left_counts, right_counts):
    return Tree(
        np.array([feature, -1, -1]),
        np.array([thr, 0.0, 0.0]),
        np.array([1, -1, -1]),
        np.array([2, -1, -1]),
        np.array([np.add(left_counts, right_counts), left_counts, right_counts]),
    )


def _model(trees, n_features=1, classes=("a", "b")):
    return ForestModel(list(trees), list(classes), ForestParams(n_trees=len(trees)), 0, n_features)


def test_single_leaf_histogram():
    label, proba = predict(_model([_leaf([3, 1])]), [0.0])
    np.testing.assert_array_equal(proba, [0.75, 0.25])
    assert label == "a"


def test_tie_goes_to_lower_class():
    label, proba = predict(_model([_leaf([4, 0]), _leaf([0, 2])]), [0.0])
    np.testing.assert_array_equal(proba, [0.5, 0.5])
    assert label == "a"


def test_five_tree_average_by_hand(rng):
    X = rng.normal(size=(40, 3))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=40) > 0, "pos", "neg")
    model = train_forest(LabeledDataset(X, y), ForestParams(n_trees=5, max_depth=3), seed=4)
    Xt = rng.normal(size=(10, 3))
    proba = model.predict_proba(Xt)
    for r, x in enumerate(Xt):
        hand = np.zeros(2)
        for t in model.trees:
            node = 0
            while t.feature[node] >= 0:
                node = t.left[node] if x[t.feature[node]] <= t.threshold[node] else t.right[node]
            hand += t.counts[node] / t.counts[node].sum()
        np.testing.assert_allclose(proba[r], hand / 5, rtol=0, atol=1e-15)


def test_separable_one_stump():
    X = np.array([[0.1], [0.4], [0.35], [0.9], [1.2], [0.8]])
    y = ["lo", "lo", "lo", "hi", "hi", "hi"]
    tree = fit_tree(X, np.array([1, 1, 1, 0, 0, 0]), 2, ForestParams(n_trees=1, max_depth=1),
                    np.random.default_rng(0), bootstrap=False)
    assert tree.depth == 1
    assert tree.threshold[0] == 0.4
    # with bootstrapping, a resample may drop the boundary point of a spread-out
    # cluster; two-valued classes are separated by any resample holding both
    Xb = np.array([[0.25]] * 10 + [[0.75]] * 10)
    yb = ["lo"] * 10 + ["hi"] * 10
    model = train_forest(LabeledDataset(Xb, yb), ForestParams(n_trees=1, max_depth=1), seed=0)
    assert model.trees[0].depth == 1
    assert np.all(model.predict_labels(Xb) == np.array(yb, dtype=object))


def _xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, dtype=float)
    y = np.array([0, 1, 1, 0] * 5)
    return X, y


def test_xor_needs_depth_two():
    X, y = _xor()
    # every depth-1 split leaves at least half the points misclassified
    best = 0.0
    for f, thr in itertools.product(range(2), np.unique(X)):
        left = X[:, f] <= thr
        acc = 0
        for side in (left, ~left):
            if side.any():
                acc += np.bincount(y[side], minlength=2).max()
        best = max(best, acc / len(y))
    assert best < 1.0
    rng = np.random.default_rng(0)
    stump = fit_tree(X, y, 2, ForestParams(max_depth=1, features_per_split=2), rng, bootstrap=False)
    pred = np.argmax(stump.leaf_proba()[stump.apply(X)], axis=1)
    assert np.mean(pred == y) < 1.0
    tree = fit_tree(X, y, 2, ForestParams(max_depth=2, features_per_split=2), rng, bootstrap=False)
    pred = np.argmax(tree.leaf_proba()[tree.apply(X)], axis=1)
    assert np.mean(pred == y) == 1.0


def _toy(rng, n=120, S=6, classes=3):
    y = rng.integers(0, classes, n)
    X = rng.normal(size=(n, S)) + y[:, None] * 0.8
    return LabeledDataset(X, np.array([f"c{v}" for v in y]), {"k": 1, "m": 3, "wavelet": "db4"})


def test_serialization_is_deterministic(rng):
    ds = _toy(rng)
    a = model_to_text(train_forest(ds, ForestParams(n_trees=7), seed=11)).encode()
    b = model_to_text(train_forest(ds, ForestParams(n_trees=7), seed=11)).encode()
    c = model_to_text(train_forest(ds, ForestParams(n_trees=7), seed=12)).encode()
    assert a == b and a != c


def test_trees_use_independent_substreams(rng):
    ds = _toy(rng)
    small = train_forest(ds, ForestParams(n_trees=3), seed=5)
    big = train_forest(ds, ForestParams(n_trees=6), seed=5)
    for t1, t2 in zip(small.trees, big.trees):
        np.testing.assert_array_equal(t1.feature, t2.feature)
        np.testing.assert_array_equal(t1.threshold, t2.threshold)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_probabilities_are_a_distribution(seed):
    rng = np.random.default_rng(seed)
    ds = _toy(rng, n=60)
    model = train_forest(ds, ForestParams(n_trees=5), seed=seed)
    P = model.predict_proba(rng.normal(size=(30, 6)) * 3)
    assert np.all((P >= 0) & (P <= 1))
    np.testing.assert_allclose(P.sum(axis=1), 1.0, rtol=0, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_monotone_transform_invariance(seed):
    rng = np.random.default_rng(seed)
    ds = _toy(rng, n=80)
    transforms = [np.exp, lambda v: v**3, lambda v: 2.5 * v - 7, np.arctan, lambda v: v + 1e3, np.sinh]
    Xt = np.column_stack([transforms[j](ds.features[:, j]) for j in range(6)])
    a = train_forest(ds, ForestParams(n_trees=4), seed=seed)
    b = train_forest(LabeledDataset(Xt, ds.labels), ForestParams(n_trees=4), seed=seed)
    Q = rng.normal(size=(40, 6)) + 1
    Qt = np.column_stack([transforms[j](Q[:, j]) for j in range(6)])
    for ta, tb in zip(a.trees, b.trees):
        np.testing.assert_array_equal(ta.feature, tb.feature)
        np.testing.assert_array_equal(ta.apply(ds.features), tb.apply(Xt))
        np.testing.assert_array_equal(ta.apply(Q), tb.apply(Qt))
    np.testing.assert_array_equal(a.predict_proba(Q), b.predict_proba(Qt))


def test_constant_features_give_majority_leaf():
    X = np.ones((10, 3))
    y = ["a"] * 7 + ["b"] * 3
    model = train_forest(LabeledDataset(X, y), ForestParams(n_trees=3), seed=0)
    assert all(t.n_nodes == 1 for t in model.trees)


def test_internal_nodes_reference_valid_features(rng):
    model = train_forest(_toy(rng), ForestParams(n_trees=5), seed=1)
    for t in model.trees:
        internal = t.feature >= 0
        assert np.all(t.feature[internal] < 6)
        leaves = ~internal
        assert np.all(t.counts[leaves].sum(axis=1) > 0)


def test_metadata_mismatch_refused(rng):
    X = np.stack([extract_features(SignalSegment(rng.normal(size=64), 100.0), 3, 1).values for _ in range(10)])
    y = ["a", "b"] * 5
    model = train_forest(LabeledDataset(X, y, {"k": 3, "m": 1, "wavelet": "db4"}), ForestParams(n_trees=2))
    seg = SignalSegment(rng.normal(size=64), 100.0)
    predict(model, extract_features(seg, 3, 1, "db4"))
    with pytest.raises(MetadataMismatchError, match="wavelet"):
        predict(model, extract_features(seg, 3, 1, "db2"))
    with pytest.raises(MetadataMismatchError):
        predict(model, extract_features(seg, 2, 2, "db4"))
    with pytest.raises(MetadataMismatchError):
        model.predict_proba(np.zeros((1, 5)))


def test_needs_two_classes():
    with pytest.raises(ValueError):
        train_forest(LabeledDataset(np.zeros((4, 2)), ["a"] * 4))


def test_split_counts():
    ds = LabeledDataset(np.arange(100.0)[:, None], ["x"] * 50 + ["y"] * 50)
    tr, te = split_dataset(ds, 0.8, seed=3)
    assert len(tr) == 80 and len(te) == 20
    assert sorted(tr.labels.tolist()).count("x") == 40
    assert sorted(te.labels.tolist()).count("y") == 10
    assert set(tr.features[:, 0]).isdisjoint(te.features[:, 0])
    assert len(set(tr.features[:, 0]) | set(te.features[:, 0])) == 100
    tr2, te2 = split_dataset(ds, 0.8, seed=3)
    np.testing.assert_array_equal(tr.features, tr2.features)


def test_split_ten_classes():
    labels = np.repeat([f"c{i}" for i in range(10)], 50)
    tr, te = split_dataset(LabeledDataset(np.zeros((500, 1)), labels), 0.8)
    for c in set(labels):
        assert np.sum(tr.labels == c) == 40 and np.sum(te.labels == c) == 10


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.5])
def test_split_bad_fraction(frac):
    with pytest.raises(ValueError):
        split_dataset(LabeledDataset(np.zeros((4, 1)), ["a", "a", "b", "b"]), frac)


def test_split_singleton_class():
    with pytest.raises(ValueError, match="fewer than 2"):
        split_dataset(LabeledDataset(np.zeros((4, 1)), ["a", "a", "a", "b"]))
