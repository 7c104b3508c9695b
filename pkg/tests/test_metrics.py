from fractions import Fraction

import numpy as np
import pytest

from oracles import brute_auc
from wptfft.ml import LabeledDataset, binary_auc, evaluate, macro_ovr_auc
from wptfft.ml.forest import ForestModel, ForestParams
from wptfft.ml.metrics import accuracy, confusion_matrix


class _FixedModel:
    """Returns stored probability rows; enough for evaluate()."""

    def __init__(self, proba, classes):
        self.proba = np.asarray(proba, dtype=float)
        self.classes = list(classes)

    def predict_proba(self, X):
        return self.proba[np.asarray(X, dtype=int)[:, 0]]


def test_perfect_classifier():
    labels = ["a", "b", "c", "a", "b", "c"]
    proba = np.eye(3)[[0, 1, 2, 0, 1, 2]]
    rep = evaluate(_FixedModel(proba, "abc"), LabeledDataset(np.arange(6)[:, None], labels))
    assert rep.accuracy == 1.0 and rep.macro_auc == 1.0
    np.testing.assert_array_equal(rep.confusion, 2 * np.eye(3))


def test_coin_flip_auc_is_one_half():
    rng = np.random.default_rng(99)
    pos = rng.random(20000) < 0.5
    assert abs(binary_auc(pos, rng.random(20000)) - 0.5) < 0.05


# 20 samples, 3 classes; scores chosen with repeated values to exercise midranks
FIXTURE_LABELS = list("aabcbacbcaabcabcbaca")
FIXTURE_SCORES = np.array([
    [0.7, 0.2, 0.1], [0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6], [0.3, 0.3, 0.4],
    [0.5, 0.1, 0.4], [0.3, 0.2, 0.5], [0.4, 0.5, 0.1], [0.2, 0.2, 0.6], [0.6, 0.2, 0.2],
    [0.3, 0.4, 0.3], [0.1, 0.8, 0.1], [0.3, 0.1, 0.6], [0.9, 0.05, 0.05], [0.2, 0.4, 0.4],
    [0.5, 0.2, 0.3], [0.4, 0.4, 0.2], [0.4, 0.3, 0.3], [0.2, 0.2, 0.6], [0.5, 0.4, 0.1],
])


def _exact_auc(pos, neg):
    total = Fraction(0)
    for p in pos:
        for q in neg:
            total += 1 if p > q else Fraction(1, 2) if p == q else 0
    return total / (len(pos) * len(neg))


def test_fixture_matches_rank_sum_oracle():
    y = np.array(FIXTURE_LABELS, dtype=object)
    macro, per_class, excluded = macro_ovr_auc(y, FIXTURE_SCORES, ["a", "b", "c"])
    assert excluded == []
    for j, c in enumerate("abc"):
        pos = FIXTURE_SCORES[y == c, j].tolist()
        neg = FIXTURE_SCORES[y != c, j].tolist()
        assert per_class[c] == float(_exact_auc(pos, neg))
        assert per_class[c] == pytest.approx(brute_auc(pos, neg), abs=1e-15)
    assert macro == pytest.approx(np.mean([per_class[c] for c in "abc"]), abs=1e-15)


def test_auc_brute_force_random(rng):
    for _ in range(20):
        s = np.round(rng.random(15), 1)  # coarse grid forces ties
        pos = rng.random(15) < 0.4
        if pos.all() or not pos.any():
            continue
        assert binary_auc(pos, s) == pytest.approx(brute_auc(s[pos], s[~pos]), abs=1e-12)


def test_absent_class_excluded_with_warning():
    labels = ["a", "a", "b", "b"]
    proba = [[0.9, 0.1, 0.0], [0.6, 0.3, 0.1], [0.2, 0.7, 0.1], [0.3, 0.3, 0.4]]
    with pytest.warns(UserWarning, match="excluded"):
        rep = evaluate(_FixedModel(proba, "abc"), LabeledDataset(np.arange(4)[:, None], labels))
    assert rep.excluded == ["c"]
    assert set(rep.per_class_auc) == {"a", "b"}
    assert rep.accuracy == 0.75


def test_unknown_test_label_warns():
    with pytest.warns(UserWarning):
        macro, _, excluded = macro_ovr_auc(["a", "b", "z"], [[1, 0], [0, 1], [0.5, 0.5]], ["a", "b"])
    assert "z" in excluded


def test_accuracy_and_confusion():
    assert accuracy(["a", "b", "b"], ["a", "b", "a"]) == pytest.approx(2 / 3)
    cm = confusion_matrix(["a", "b", "b"], ["a", "b", "a"], ["a", "b"])
    np.testing.assert_array_equal(cm, [[1, 0], [1, 1]])
    with pytest.raises(ValueError):
        accuracy([], [])


def test_report_text_is_full_precision():
    rep = evaluate(_FixedModel(FIXTURE_SCORES, "abc"), LabeledDataset(np.arange(20)[:, None], FIXTURE_LABELS))
    text = rep.to_text()
    line = [l for l in text.splitlines() if l.startswith("macro_auc=")][0]
    assert float(line.split("=")[1]) == rep.macro_auc


def test_empty_test_set():
    model = ForestModel([], ["a", "b"], ForestParams(), 0, 1)
    with pytest.raises(ValueError):
        evaluate(model, LabeledDataset(np.zeros((0, 1)), []))
