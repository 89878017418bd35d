# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Confusion matrices and precision / recall / F1 scores.

Headline numbers are macro averages: unweighted means over all classes.
A class whose precision (or recall) denominator is zero scores 0 and is
listed in MetricsReport.degenerate.
"""

from typing import NamedTuple, Tuple

import numpy as np


class MetricsError(ValueError):
    """Label sequences cannot be scored."""


class ConfusionMatrix(NamedTuple):
    """K x K counts, entry [true, predicted]."""
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


class MetricsReport(NamedTuple):
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    count: int
    degenerate: Tuple[int, ...]


def confusion_matrix(true_labels, predicted_labels,
                     num_classes: int) -> ConfusionMatrix:
    true = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != pred.shape:
        raise MetricsError('got {} true and {} predicted labels'.format(
            true.size, pred.size))
    if true.size == 0:
        raise MetricsError('no labels to score')
    if min(true.min(), pred.min()) < 0 or \
       max(true.max(), pred.max()) >= num_classes:
        raise MetricsError('labels must lie in [0, {})'.format(num_classes))
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return ConfusionMatrix(counts)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    safe = np.where(den == 0, 1, den)
    return np.where(den == 0, 0.0, num / safe)


def report_from_confusion(confusion: ConfusionMatrix) -> MetricsReport:
    counts = confusion.counts
    tp = np.diag(counts).astype(np.float64)
    predicted = counts.sum(axis=0).astype(np.float64)
    actual = counts.sum(axis=1).astype(np.float64)
    precision = _ratio(tp, predicted)
    recall = _ratio(tp, actual)
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    degenerate = tuple(
        int(k) for k in np.flatnonzero((predicted == 0) | (actual == 0)))
    total = confusion.total
    return MetricsReport(precision=precision,
                         recall=recall,
                         f1=f1,
                         macro_precision=float(precision.mean()),
                         macro_recall=float(recall.mean()),
                         macro_f1=float(f1.mean()),
                         accuracy=float(tp.sum() / total) if total else 0.0,
                         count=total,
                         degenerate=degenerate)


def compute_metrics(true_labels, predicted_labels,
                    num_classes: int) -> MetricsReport:
    """Per-class and macro precision, recall and F1 plus accuracy."""
    confusion = confusion_matrix(true_labels, predicted_labels, num_classes)
    return report_from_confusion(confusion)


def macro_f1(true_labels, predicted_labels, num_classes: int) -> float:
    return compute_metrics(true_labels, predicted_labels, num_classes).macro_f1
