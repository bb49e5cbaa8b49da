"""Evaluation metrics: accuracy, predictive R^2, micro-averaged P/R/F1."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["EvalReport", "accuracy", "predictive_r2", "prf1_multilabel"]


@dataclass
class EvalReport:
    """Named metric values plus optional counts, rendered line-oriented."""

    values: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [f"{name}\t{value:.6g}" for name, value in self.values.items()]
        out.extend(f"{name}\t{value}" for name, value in self.counts.items())
        return out


def accuracy(pred, truth) -> float:
    """Fraction of exact matches."""
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise ValueError("prediction and truth lengths differ")
    if not truth:
        raise ValueError("cannot score an empty set of predictions")
    return sum(p == t for p, t in zip(pred, truth)) / len(truth)


def predictive_r2(pred, truth) -> float:
    """1 - SSE / SST against the truth mean; undefined for constant truth."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth lengths differ")
    sst = float(np.sum((truth - truth.mean()) ** 2))
    if sst == 0.0:
        raise ValueError("truth has zero variance; predictive R^2 is undefined")
    sse = float(np.sum((truth - pred) ** 2))
    return 1.0 - sse / sst


def prf1_multilabel(pred, truth) -> tuple[float, float, float]:
    """Micro-averaged precision, recall, and F1 over label decisions.

    All 0/0 cases resolve to 0 (e.g. empty predictions against
    non-empty truth give (0, 0, 0)).
    """
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise ValueError("prediction and truth lengths differ")
    tp = fp = fn = 0
    for p, t in zip(pred, truth):
        p, t = frozenset(p), frozenset(t)
        tp += len(p & t)
        fp += len(p - t)
        fn += len(t - p)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
