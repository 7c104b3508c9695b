"""Accuracy, one-vs-rest ROC AUC and confusion matrices."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .data import LabeledDataset


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape[0] == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return float(np.mean(y_true == y_pred))


def binary_auc(positive, scores) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg), ties counting 1/2."""
    positive = np.asarray(positive, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(positive.sum())
    n_neg = positive.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative sample")
    ranks = rankdata(scores)  # midranks for ties
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def macro_ovr_auc(y_true, proba, classes):
    """Macro mean of per-class one-vs-rest AUCs.

    Classes with no positive or no negative test sample have no AUC; they
    are skipped with a warning and listed in the returned ``excluded``.
    """
    y_true = np.asarray(y_true, dtype=object)
    proba = np.asarray(proba, dtype=np.float64)
    per_class = {}
    excluded = []
    for j, c in enumerate(classes):
        pos = y_true == c
        if pos.all() or not pos.any():
            excluded.append(c)
            continue
        per_class[c] = binary_auc(pos, proba[:, j])
    unknown = sorted(set(y_true.tolist()) - set(classes))
    if unknown:
        warnings.warn(f"test labels {unknown} are unknown to the model; AUC undefined for them")
        excluded.extend(unknown)
    if excluded:
        warnings.warn(f"AUC undefined for classes {excluded}; excluded from the macro average")
    macro = float(np.mean(list(per_class.values()))) if per_class else float("nan")
    return macro, per_class, excluded


def confusion_matrix(y_true, y_pred, classes) -> np.ndarray:
    """Rows are true classes, columns predicted classes, both in ``classes`` order."""
    lookup = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t in lookup:
            cm[lookup[t], lookup[p]] += 1
    return cm


@dataclass
class EvaluationReport:
    accuracy: float
    macro_auc: float
    per_class_auc: dict
    confusion: np.ndarray
    classes: list
    excluded: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"accuracy={self.accuracy:.17g}",
            f"macro_auc={self.macro_auc:.17g}",
        ]
        for c in self.classes:
            if c in self.per_class_auc:
                lines.append(f"auc[{c}]={self.per_class_auc[c]:.17g}")
        if self.excluded:
            lines.append("excluded=" + ",".join(self.excluded))
        lines.append("confusion (rows=true, cols=predicted)")
        lines.append("," + ",".join(self.classes))
        for c, row in zip(self.classes, self.confusion):
            lines.append(c + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def evaluate(model, test: LabeledDataset) -> EvaluationReport:
    if len(test) == 0:
        raise ValueError("empty test set")
    proba = model.predict_proba(test.features)
    pred = np.asarray(model.classes, dtype=object)[np.argmax(proba, axis=1)]
    acc = accuracy(test.labels, pred)
    macro, per_class, excluded = macro_ovr_auc(test.labels, proba, model.classes)
    cm = confusion_matrix(test.labels, pred, model.classes)
    return EvaluationReport(acc, macro, per_class, cm, list(model.classes), excluded)
