"""Binary classification metrics with UAV as the positive class.

Confusion matrix at a decision threshold, per-class and support-weighted
precision/recall/F1, accuracy, and the ROC curve swept over grouped score
thresholds with trapezoidal AUC. Degenerate 0/0 ratios are defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def uav_support(self) -> int:
        return self.tp + self.fn

    @property
    def fa_support(self) -> int:
        return self.tn + self.fp


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    uav: ClassMetrics
    false_alarm: ClassMetrics
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    accuracy: float
    total: int


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr) from (0,0) to (1,1)
    auc: float


def confusion_at_threshold(labels, probabilities, threshold: float = 0.5) -> ConfusionMatrix:
    """Counts with prediction UAV iff p > threshold (strictly)."""
    y = np.asarray(labels).astype(bool)
    p = np.asarray(probabilities, dtype=np.float64)
    if y.shape != p.shape:
        raise ShapeError(f"labels shape {y.shape} != probabilities shape {p.shape}")
    pred = p > threshold
    return ConfusionMatrix(
        tp=int(np.sum(pred & y)),
        fp=int(np.sum(pred & ~y)),
        fn=int(np.sum(~pred & y)),
        tn=int(np.sum(~pred & ~y)),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s else 0.0


def classification_report(cm: ConfusionMatrix) -> ClassificationReport:
    """Per-class and support-weighted metrics from one confusion matrix."""
    if cm.total == 0:
        raise ValidationError("empty confusion matrix")
    uav_p = _ratio(cm.tp, cm.tp + cm.fp)
    uav_r = _ratio(cm.tp, cm.tp + cm.fn)
    fa_p = _ratio(cm.tn, cm.tn + cm.fn)
    fa_r = _ratio(cm.tn, cm.tn + cm.fp)
    uav = ClassMetrics(uav_p, uav_r, _f1(uav_p, uav_r), cm.uav_support)
    fa = ClassMetrics(fa_p, fa_r, _f1(fa_p, fa_r), cm.fa_support)

    def weighted(get):
        return (get(uav) * uav.support + get(fa) * fa.support) / cm.total

    return ClassificationReport(
        uav=uav,
        false_alarm=fa,
        weighted_precision=weighted(lambda m: m.precision),
        weighted_recall=weighted(lambda m: m.recall),
        weighted_f1=weighted(lambda m: m.f1),
        accuracy=(cm.tp + cm.tn) / cm.total,
        total=cm.total,
    )


def roc_curve(labels, probabilities) -> RocCurve:
    """Threshold sweep over distinct scores, ties flipping together.

    Points run from (0, 0) to exactly (1, 1); the area uses the trapezoidal
    rule. Both classes must be present, or a rate is undefined.
    """
    y = np.asarray(labels).astype(bool)
    p = np.asarray(probabilities, dtype=np.float64)
    if y.shape != p.shape:
        raise ShapeError(f"labels shape {y.shape} != probabilities shape {p.shape}")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("roc_curve needs both classes present")

    order = np.argsort(-p, kind="stable")
    ps = p[order]
    ys = y[order]
    points = [(0.0, 0.0)]
    cum_tp = cum_fp = 0
    i = 0
    while i < ps.size:
        j = i
        while j < ps.size and ps[j] == ps[i]:
            j += 1
        cum_tp += int(ys[i:j].sum())
        cum_fp += (j - i) - int(ys[i:j].sum())
        points.append((cum_fp / n_neg, cum_tp / n_pos))
        i = j
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y1 + y0) / 2.0
    return RocCurve(tuple(points), auc)


def render_confusion(cm: ConfusionMatrix) -> str:
    """Two-by-two count table, true classes as rows."""
    rows = [
        ("", "pred FA (0)", "pred UAV (1)"),
        ("true FA (0)", str(cm.tn), str(cm.fp)),
        ("true UAV (1)", str(cm.fn), str(cm.tp)),
    ]
    widths = [max(len(r[c]) for r in rows) for c in range(3)]
    return "\n".join(
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows
    )


def render_report(report: ClassificationReport) -> str:
    """Aligned per-class table with weighted averages and accuracy."""
    rows = [
        ("", "precision", "recall", "f1-score", "support"),
        (
            "FA (0)",
            f"{report.false_alarm.precision:.2f}",
            f"{report.false_alarm.recall:.2f}",
            f"{report.false_alarm.f1:.2f}",
            str(report.false_alarm.support),
        ),
        (
            "UAV (1)",
            f"{report.uav.precision:.2f}",
            f"{report.uav.recall:.2f}",
            f"{report.uav.f1:.2f}",
            str(report.uav.support),
        ),
        (
            "weighted avg",
            f"{report.weighted_precision:.2f}",
            f"{report.weighted_recall:.2f}",
            f"{report.weighted_f1:.2f}",
            str(report.total),
        ),
        ("accuracy", "", "", f"{report.accuracy:.2f}", str(report.total)),
    ]
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    return "\n".join(
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows
    )


def roc_csv(curve: RocCurve) -> str:
    """CSV export: header ``fpr,tpr``, one point per line, 9 significant digits."""
    lines = ["fpr,tpr"]
    lines.extend(f"{fpr:.9g},{tpr:.9g}" for fpr, tpr in curve.points)
    return "\n".join(lines) + "\n"
