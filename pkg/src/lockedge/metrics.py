"""Evaluation: confusion matrix, per-class rates, micro/macro ROC curves.

Per-class rates with an empty denominator are reported as NaN ("undefined")
and excluded from macro averages instead of being silently coerced to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import as_labels, as_matrix


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts with true classes on rows and predicted classes on columns."""
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    t = as_labels(y_true, "y_true", n_classes=n_classes)
    p = as_labels(y_pred, "y_pred", n_classes=n_classes, n_rows=t.shape[0])
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass(frozen=True)
class ClassReport:
    """Per-class detection rate (recall), precision and F1, plus accuracy.

    Undefined entries (no samples of the class, or no predictions of it) are
    NaN; the macro averages skip them.
    """

    confusion: np.ndarray
    detection_rate: np.ndarray
    precision: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float

    @property
    def n_classes(self) -> int:
        return int(self.confusion.shape[0])

    @property
    def macro_detection_rate(self) -> float:
        return _nanmean(self.detection_rate)

    @property
    def macro_precision(self) -> float:
        return _nanmean(self.precision)

    @property
    def macro_f1(self) -> float:
        return _nanmean(self.f1)

    def to_dict(self, class_names=None) -> dict:
        names = (
            list(class_names)
            if class_names is not None
            else [f"class_{i}" for i in range(self.n_classes)]
        )
        if len(names) != self.n_classes:
            raise ValueError("class_names length does not match report")
        return {
            "version": 1,
            "kind": "class_report",
            "accuracy": self.accuracy,
            "macro_detection_rate": _none_if_nan(self.macro_detection_rate),
            "macro_precision": _none_if_nan(self.macro_precision),
            "macro_f1": _none_if_nan(self.macro_f1),
            "classes": [
                {
                    "name": names[i],
                    "support": int(self.support[i]),
                    "detection_rate": _none_if_nan(float(self.detection_rate[i])),
                    "precision": _none_if_nan(float(self.precision[i])),
                    "f1": _none_if_nan(float(self.f1[i])),
                }
                for i in range(self.n_classes)
            ],
            "confusion": self.confusion.tolist(),
        }

    def format_text(self, class_names=None) -> str:
        obj = self.to_dict(class_names)
        width = max(len(c["name"]) for c in obj["classes"])
        width = max(width, len("class"))
        lines = [
            f"{'class':<{width}}  {'support':>8}  {'DR':>9}  {'precision':>9}  {'F1':>9}"
        ]
        for c in obj["classes"]:
            lines.append(
                f"{c['name']:<{width}}  {c['support']:>8d}  "
                f"{_fmt(c['detection_rate'])}  {_fmt(c['precision'])}  {_fmt(c['f1'])}"
            )
        lines.append("")
        lines.append(f"accuracy          {obj['accuracy']:.5f}")
        lines.append(f"macro DR          {_fmt(obj['macro_detection_rate'])}")
        lines.append(f"macro precision   {_fmt(obj['macro_precision'])}")
        lines.append(f"macro F1          {_fmt(obj['macro_f1'])}")
        return "\n".join(lines)


def _fmt(value) -> str:
    return f"{value:>9.5f}" if value is not None else f"{'undef':>9}"


def _none_if_nan(value: float):
    return None if value is None or math.isnan(value) else value


def _nanmean(values: np.ndarray) -> float:
    mask = ~np.isnan(values)
    if not mask.any():
        return float("nan")
    return float(values[mask].mean())


def class_report(confusion: np.ndarray) -> ClassReport:
    """Derive per-class rates from a confusion matrix.

    F1 is NaN when either constituent rate is undefined, and 0 when both are
    defined but zero.
    """
    cm = np.asarray(confusion)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] < 2:
        raise ValueError("confusion matrix must be square with >= 2 classes")
    if not np.issubdtype(cm.dtype, np.integer) or (cm < 0).any():
        raise ValueError("confusion matrix must hold non-negative integers")
    total = int(cm.sum())
    if total == 0:
        raise ValueError("confusion matrix is empty")

    tp = np.diag(cm).astype(np.float64)
    row = cm.sum(axis=1).astype(np.float64)  # tp + fn
    col = cm.sum(axis=0).astype(np.float64)  # tp + fp

    with np.errstate(invalid="ignore", divide="ignore"):
        dr = np.where(row > 0, tp / row, np.nan)
        prec = np.where(col > 0, tp / col, np.nan)

    f1 = np.full(cm.shape[0], np.nan)
    for i in range(cm.shape[0]):
        if np.isnan(dr[i]) or np.isnan(prec[i]):
            continue
        s = dr[i] + prec[i]
        f1[i] = 0.0 if s == 0.0 else 2.0 * dr[i] * prec[i] / s

    return ClassReport(
        confusion=cm.astype(np.int64),
        detection_rate=dr,
        precision=prec,
        f1=f1,
        support=cm.sum(axis=1).astype(np.int64),
        accuracy=float(tp.sum() / total),
    )


# ---------------------------------------------------------------------------
# ROC


@dataclass(frozen=True)
class RocResult:
    """Operating-point curve and its area, for one averaging mode."""

    points: tuple[tuple[float, float], ...]
    auc: float
    average: str


def multiclass_roc(scores, labels, average: str = "micro") -> RocResult:
    """Micro- or macro-averaged one-vs-rest ROC for per-class scores.

    micro: all N*c (one-hot truth, score) pairs pooled into one binary curve.
    macro: per-class curves for classes present in the truth, AUCs averaged,
    curve points averaged on the union FPR grid.

    Raises ``ValueError`` when the truth holds a single class: every
    thresholding of such data is degenerate.
    """
    S = as_matrix(scores, "scores")
    if S.shape[1] < 2:
        raise ValueError("scores must have at least 2 class columns")
    y = as_labels(labels, "labels", n_classes=S.shape[1], n_rows=S.shape[0])
    if np.unique(y).size < 2:
        raise ValueError("degenerate ROC: truth contains a single class")

    if average == "micro":
        onehot = np.zeros_like(S)
        onehot[np.arange(S.shape[0]), y] = 1.0
        points, auc = _binary_roc(S.ravel(), onehot.ravel())
        return RocResult(points=points, auc=auc, average="micro")
    if average == "macro":
        present = np.unique(y)
        curves = []
        aucs = []
        for cls in present:
            pts, auc = _binary_roc(S[:, cls], (y == cls).astype(np.float64))
            curves.append(pts)
            aucs.append(auc)
        return RocResult(
            points=_average_curves(curves),
            auc=float(np.mean(aucs)),
            average="macro",
        )
    raise ValueError(f"average must be 'micro' or 'macro', got {average!r}")


def _binary_roc(scores: np.ndarray, truth: np.ndarray):
    """Single binary ROC; equal scores form one block (half credit on ties)."""
    pos = float(truth.sum())
    neg = float(truth.size - pos)
    if pos == 0.0 or neg == 0.0:
        raise ValueError("degenerate ROC: need both positive and negative samples")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    t_sorted = truth[order]

    # Indices closing each block of tied scores.
    distinct = np.flatnonzero(np.diff(s_sorted) != 0.0)
    block_ends = np.concatenate([distinct, [scores.size - 1]])

    cum_tp = np.cumsum(t_sorted)[block_ends]
    cum_fp = (block_ends + 1.0) - cum_tp
    fpr = np.concatenate([[0.0], cum_fp / neg])
    tpr = np.concatenate([[0.0], cum_tp / pos])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    points = tuple(zip(fpr.tolist(), tpr.tolist()))
    return points, auc


def _average_curves(curves) -> tuple[tuple[float, float], ...]:
    grid = np.unique(np.concatenate([[f for f, _ in pts] for pts in curves]))
    mean_tpr = np.zeros_like(grid)
    for pts in curves:
        fpr = np.array([f for f, _ in pts])
        tpr = np.array([t for _, t in pts])
        mean_tpr += np.interp(grid, fpr, tpr)
    mean_tpr /= len(curves)
    points = list(zip(grid.tolist(), mean_tpr.tolist()))
    if points[0] != (0.0, 0.0):
        points.insert(0, (0.0, 0.0))
    return tuple(points)
