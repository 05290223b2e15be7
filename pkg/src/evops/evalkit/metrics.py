"""Classification and regression metrics used across tasks.

Conventions for zero denominators: precision is 0 when TP+FP == 0, recall is 0
when TP+FN == 0, F1 is 0 when precision+recall == 0. Every applied convention
is recorded in the returned ``flags`` list.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from evops.errors import EvopsError


class EmptyCounts(EvopsError):
    pass


class LengthMismatch(EvopsError):
    pass


@dataclass
class ConfusionCounts:
    """Square confusion matrix indexed by (true class, predicted class)."""

    matrix: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"confusion matrix must be square, got shape {m.shape}")
        if (m < 0).any():
            raise ValueError("confusion matrix entries must be non-negative")
        self.matrix = m

    @classmethod
    def from_predictions(cls, y_true, y_pred, num_classes: int | None = None,
                         labels: list[str] | None = None) -> "ConfusionCounts":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise LengthMismatch(f"y_true has {y_true.shape}, y_pred has {y_pred.shape}")
        k = num_classes or int(max(y_true.max(initial=0), y_pred.max(initial=0)) + 1)
        m = np.zeros((k, k), dtype=np.int64)
        np.add.at(m, (y_true, y_pred), 1)
        return cls(matrix=m, labels=labels)

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    @property
    def num_classes(self) -> int:
        return self.matrix.shape[0]

    def tp(self, k: int) -> int:
        return int(self.matrix[k, k])

    def fn(self, k: int) -> int:
        return int(self.matrix[k, :].sum() - self.matrix[k, k])

    def fp(self, k: int) -> int:
        return int(self.matrix[:, k].sum() - self.matrix[k, k])

    def tn(self, k: int) -> int:
        return self.total - self.tp(k) - self.fn(k) - self.fp(k)

    def binary_view(self, positive: int) -> dict:
        return {"tp": self.tp(positive), "tn": self.tn(positive),
                "fp": self.fp(positive), "fn": self.fn(positive)}


def classification_metrics(cc: ConfusionCounts, positive: int | None = None) -> dict:
    """Accuracy / precision / recall / F1 from confusion counts.

    With ``positive`` set, metrics are one-vs-rest for that class. Otherwise
    precision/recall/F1 are macro-averaged over all classes and accuracy is
    trace/total.
    """
    if cc.total == 0:
        raise EmptyCounts("confusion matrix is empty")
    flags: list[str] = []

    def per_class(k: int) -> tuple[float, float, float]:
        tp, fp, fn = cc.tp(k), cc.fp(k), cc.fn(k)
        if tp + fp == 0:
            flags.append(f"precision[{k}]=0 (TP+FP=0)")
            prec = 0.0
        else:
            prec = tp / (tp + fp)
        if tp + fn == 0:
            flags.append(f"recall[{k}]=0 (TP+FN=0)")
            rec = 0.0
        else:
            rec = tp / (tp + fn)
        if prec + rec == 0:
            f1 = 0.0
        else:
            f1 = 2 * prec * rec / (prec + rec)
        return prec, rec, f1

    if positive is not None:
        tp, tn = cc.tp(positive), cc.tn(positive)
        acc = (tp + tn) / cc.total
        prec, rec, f1 = per_class(positive)
    else:
        acc = float(np.trace(cc.matrix)) / cc.total
        rows = [per_class(k) for k in range(cc.num_classes)]
        prec = float(np.mean([r[0] for r in rows]))
        rec = float(np.mean([r[1] for r in rows]))
        f1 = float(np.mean([r[2] for r in rows]))

    return {"accuracy": acc, "precision": prec, "recall": rec, "f1": f1, "flags": flags}


@dataclass
class RegressionErrors:
    mae: float
    mse: float
    rmse: float
    n: int

    def __post_init__(self):
        if self.mae < 0 or self.mse < 0:
            raise ValueError("errors must be non-negative")
        if not math.isclose(self.rmse, math.sqrt(self.mse), rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("rmse must equal sqrt(mse)")


def regression_metrics(y, y_hat) -> RegressionErrors:
    """MAE / MSE / RMSE over paired samples."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.size == 0:
        raise LengthMismatch(f"got shapes {y.shape} and {y_hat.shape}")
    err = y - y_hat
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err ** 2))
    return RegressionErrors(mae=mae, mse=mse, rmse=math.sqrt(mse), n=y.size)
