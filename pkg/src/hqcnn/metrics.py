"""Classification metrics: accuracy, macro F1/precision/recall, confusion matrix.

Conventions: confusion rows are true classes, columns are predictions.
Per-class precision (recall) is 0 when the class was never predicted
(never occurs), so macro averages stay defined on degenerate predictors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_CLASSES = 4


@dataclass
class Metrics:
    accuracy: float
    macro_f1: float
    macro_precision: float
    macro_recall: float
    confusion: np.ndarray  # (n_classes, n_classes) int counts
    curves: list = field(default_factory=list)  # (iter, train_loss, train_acc, test_acc)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "confusion": self.confusion.tolist(),
            "curves": [list(row) for row in self.curves],
        }


def confusion_matrix(y_true, y_pred, n_classes: int = N_CLASSES) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"label/prediction length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise ValueError("cannot compute metrics on an empty prediction set")
    for arr, what in ((y_true, "label"), (y_pred, "prediction")):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise ValueError(f"{what} outside 0..{n_classes - 1}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def compute_metrics(y_true, y_pred, n_classes: int = N_CLASSES, curves=None) -> Metrics:
    cm = confusion_matrix(y_true, y_pred, n_classes)
    total = cm.sum()
    diag = np.diag(cm).astype(np.float64)
    row = cm.sum(axis=1).astype(np.float64)  # true counts
    col = cm.sum(axis=0).astype(np.float64)  # predicted counts
    precision = np.divide(diag, col, out=np.zeros(n_classes), where=col > 0)
    recall = np.divide(diag, row, out=np.zeros(n_classes), where=row > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(n_classes), where=pr > 0)
    return Metrics(
        accuracy=float(diag.sum() / total),
        macro_f1=float(f1.mean()),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        confusion=cm,
        curves=list(curves) if curves else [],
    )
