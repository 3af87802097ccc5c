"""Confusion matrices and macro-averaged classification metrics.

Six summary metrics are reported: accuracy, macro precision/recall/F1
(one-vs-rest, averaged unweighted over classes), Cohen's kappa, and the
Matthews correlation coefficient in its generalized multiclass form
(which reduces to the familiar binary formula for C = 2).  All 0/0
cases resolve to 0: per-class precision/recall/F1 with empty
denominators, MCC with a vanishing denominator, and kappa at p_e = 1.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    kappa: float
    mcc: float
    per_class_recall: np.ndarray

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.macro_precision,
            "recall": self.macro_recall,
            "f1": self.macro_f1,
            "kappa": self.kappa,
            "mcc": self.mcc,
            "per_class_recall": [float(r) for r in self.per_class_recall],
        }


def confusion(true_labels, predicted_labels, num_classes: int) -> ConfusionMatrix:
    """Tally counts[true][predicted] over paired label sequences."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError(f"label lengths differ: {t.shape} vs {p.shape}")
    if t.size and (t.min() < 0 or t.max() >= num_classes):
        raise ValueError("true label out of range")
    if p.size and (p.min() < 0 or p.max() >= num_classes):
        raise ValueError("predicted label out of range")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts=counts)


def report(cm: ConfusionMatrix) -> MetricReport:
    """Compute the six summary metrics from a confusion matrix."""
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty confusion matrix")
    diag = np.diag(counts)
    true_totals = counts.sum(axis=1)  # row marginals
    pred_totals = counts.sum(axis=0)  # column marginals

    accuracy = diag.sum() / total
    precision = _safe_div(diag, pred_totals)
    recall = _safe_div(diag, true_totals)
    f1 = _safe_div(2.0 * precision * recall, precision + recall)

    p_o = accuracy
    p_e = float(true_totals @ pred_totals) / total**2
    kappa = 0.0 if p_e >= 1.0 else (p_o - p_e) / (1.0 - p_e)

    # generalized multiclass MCC from the full matrix
    cov_tp = diag.sum() * total - float(true_totals @ pred_totals)
    var_p = total**2 - float(pred_totals @ pred_totals)
    var_t = total**2 - float(true_totals @ true_totals)
    denom = np.sqrt(var_p * var_t)
    mcc = 0.0 if denom == 0.0 else cov_tp / denom

    return MetricReport(
        accuracy=float(accuracy),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        kappa=float(kappa),
        mcc=float(mcc),
        per_class_recall=recall,
    )


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out
