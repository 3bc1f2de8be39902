"""Multi-class evaluation suite: confusion matrix, precision/recall/F1,
Cohen's kappa, one-vs-rest ROC curves and AUC.

Binary-style TP/TN/FP/FN quantities are read one-vs-rest per class off a
confusion matrix whose rows are true classes and columns are predictions.
Aggregates are macro averages (unweighted class means) unless stated
otherwise; a micro option covers the alternative reading. Undefined
precision/recall/F1 (zero denominator) are reported as 0 and the affected
classes are flagged, so degenerate predictors still yield complete reports.

Every function here is pure: no hidden state, thread-safe, permutation
invariant over records.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-12


@dataclass
class ConfusionMatrix:
    """counts[i][j] = number of records with true class i predicted as j."""

    counts: np.ndarray
    class_names: list[str]

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)


@dataclass
class ClassificationReport:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    kappa: float
    support: np.ndarray
    zero_division_classes: list[int]


@dataclass
class RocCurve:
    class_index: int
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


@dataclass
class AucScore:
    per_class: np.ndarray
    macro: float


@dataclass
class EvaluationReport:
    """Everything the evaluation protocol reports for one model."""

    confusion: ConfusionMatrix
    classification: ClassificationReport
    roc_curves: list[RocCurve]
    auc: AucScore
    mean_loss: float


def confusion_matrix(y_true, y_pred, n_classes: int, class_names: list[str] | None = None) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(f"label arrays must be 1-D and equal length, got {y_true.shape} vs {y_pred.shape}")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"{name} contains labels outside [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    names = class_names if class_names is not None else [f"class_{i}" for i in range(n_classes)]
    return ConfusionMatrix(counts, list(names))


def accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total: the multi-class (TP+TN)/(TP+TN+FP+FN)."""
    total = cm.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.trace(cm.counts) / total)


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class one-vs-rest precision, recall, F1 (0 where undefined)."""
    diag = np.diag(cm.counts).astype(np.float64)
    precision = _safe_div(diag, cm.col_sums().astype(np.float64))
    recall = _safe_div(diag, cm.row_sums().astype(np.float64))
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    return precision, recall, f1


def cohen_kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    When the marginals make chance agreement certain (p_e == 1, all mass
    in one cell) the formula is undefined; perfect agreement returns 1.0
    and total disagreement returns 0.0.
    """
    total = cm.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    p_o = float(np.trace(cm.counts) / total)
    p_e = float(np.sum(cm.row_sums() * cm.col_sums()) / (total * total))
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def roc_curve_ovr(scores: np.ndarray, y_true, positive_class: int) -> RocCurve:
    """One-vs-rest ROC for one class from an (n, K) score matrix.

    Thresholds sweep the positive-class scores in descending order; tied
    scores collapse into a single step. The curve starts at (0, 0) with a
    +inf sentinel threshold and ends at (1, 1).
    """
    scores = np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[0] != y_true.shape[0]:
        raise ValueError("scores must be (n, K) aligned with y_true")
    positive = y_true == positive_class
    n_pos = int(positive.sum())
    n_neg = int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError(
            f"class {positive_class} needs at least one positive and one negative example "
            f"(got {n_pos} positive, {n_neg} negative)"
        )
    s = scores[:, positive_class]
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    pos_sorted = positive[order]
    # last index of each tie group
    distinct = np.flatnonzero(np.diff(s_sorted) != 0.0)
    boundaries = np.concatenate([distinct, [s.size - 1]])
    tp = np.cumsum(pos_sorted)[boundaries]
    fp = np.cumsum(~pos_sorted)[boundaries]
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    thresholds = np.concatenate([[np.inf], s_sorted[boundaries]])
    return RocCurve(positive_class, fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under TPR over FPR.

    With tied scores grouped into single steps this equals the pairwise
    concordance probability with half credit for ties.
    """
    return float(np.trapezoid(curve.tpr, curve.fpr))


def mean_cross_entropy(probs: np.ndarray, y_true) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    p = np.clip(probs[np.arange(len(y_true)), y_true], PROB_FLOOR, 1.0)
    return float(np.mean(-np.log(p)))


def full_report(
    probs: np.ndarray,
    y_pred,
    y_true,
    n_classes: int,
    class_names: list[str] | None = None,
) -> EvaluationReport:
    """Assemble the complete evaluation for one model's predictions."""
    probs = np.asarray(probs, dtype=np.float64)
    cm = confusion_matrix(y_true, y_pred, n_classes, class_names)
    acc = accuracy(cm)
    precision, recall, f1 = precision_recall_f1(cm)
    support = cm.row_sums()
    degenerate = sorted(
        set(np.flatnonzero(cm.col_sums() == 0)) | set(np.flatnonzero(support == 0))
    )
    diag = float(np.trace(cm.counts))
    micro = diag / cm.total  # single-label case: micro P = R = F1 = accuracy
    classification = ClassificationReport(
        accuracy=acc,
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        micro_precision=micro,
        micro_recall=micro,
        micro_f1=micro,
        kappa=cohen_kappa(cm),
        support=support,
        zero_division_classes=[int(c) for c in degenerate],
    )
    curves = [roc_curve_ovr(probs, y_true, c) for c in range(n_classes)]
    per_class_auc = np.array([auc(c) for c in curves])
    auc_score = AucScore(per_class_auc, float(per_class_auc.mean()))
    return EvaluationReport(
        confusion=cm,
        classification=classification,
        roc_curves=curves,
        auc=auc_score,
        mean_loss=mean_cross_entropy(probs, y_true),
    )


# ---------------------------------------------------------------------------
# report export


def metric_table_rows(
    report: EvaluationReport, training_accuracy: float | None = None
) -> list[tuple[str, float]]:
    """Flatten a report into the named rows of the comparison protocol."""
    cls = report.classification
    names = report.confusion.class_names
    rows: list[tuple[str, float]] = []
    if training_accuracy is not None:
        rows.append(("Training Accuracy", training_accuracy))
        rows.append(("Testing Accuracy", cls.accuracy))
    else:
        rows.append(("Accuracy", cls.accuracy))
    for i, name in enumerate(names):
        rows.append((f"Precision (Class {i}: {name})", float(cls.precision[i])))
    rows.append(("Recall (All Classes)", cls.macro_recall))
    rows.append(("F1-Score (All Classes)", cls.macro_f1))
    rows.append(("Kappa Score", cls.kappa))
    rows.append(("ROC-AUC", report.auc.macro))
    rows.append(("Loss", report.mean_loss))
    return rows


def format_report_text(report: EvaluationReport, training_accuracy: float | None = None) -> str:
    cls = report.classification
    names = report.confusion.class_names
    lines = ["Evaluation report", "================="]
    for name, value in metric_table_rows(report, training_accuracy):
        lines.append(f"{name:<32s} {value:.4f}")
    lines.append("")
    lines.append("Per-class metrics")
    lines.append(f"{'class':<12s} {'precision':>9s} {'recall':>9s} {'f1':>9s} {'auc':>9s} {'support':>8s}")
    for i, name in enumerate(names):
        lines.append(
            f"{name:<12s} {cls.precision[i]:>9.4f} {cls.recall[i]:>9.4f} "
            f"{cls.f1[i]:>9.4f} {report.auc.per_class[i]:>9.4f} {int(cls.support[i]):>8d}"
        )
    if cls.zero_division_classes:
        flagged = ", ".join(names[c] for c in cls.zero_division_classes)
        lines.append(f"warning: zero-denominator metrics reported as 0 for: {flagged}")
    lines.append("")
    lines.append("Confusion matrix (rows = true, columns = predicted)")
    width = max(8, max(len(n) for n in names) + 1)
    lines.append(" " * width + "".join(f"{n:>{width}s}" for n in names))
    for i, name in enumerate(names):
        lines.append(f"{name:<{width}s}" + "".join(f"{int(v):>{width}d}" for v in report.confusion.counts[i]))
    return "\n".join(lines) + "\n"


def write_confusion_csv(cm: ConfusionMatrix, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("true\\pred," + ",".join(cm.class_names) + "\n")
        for i, name in enumerate(cm.class_names):
            fh.write(name + "," + ",".join(str(int(v)) for v in cm.counts[i]) + "\n")


def write_roc_csv(curves: list[RocCurve], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("class,threshold,fpr,tpr\n")
        for curve in curves:
            for t, f, r in zip(curve.thresholds, curve.fpr, curve.tpr):
                fh.write(f"{curve.class_index},{repr(float(t))},{repr(float(f))},{repr(float(r))}\n")


def write_metrics_csv(rows: list[tuple[str, float]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("metric,value\n")
        for name, value in rows:
            fh.write(f"{name},{repr(float(value))}\n")


def read_metrics_csv(path: str) -> list[tuple[str, float]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "metric,value":
            raise ValueError(f"not a metrics csv: {path}")
        for line in fh:
            name, _, value = line.rstrip("\n").rpartition(",")
            rows.append((name, float(value)))
    return rows


def confusion_matrix_svg(cm: ConfusionMatrix, cell: int = 64) -> str:
    """Minimal standalone SVG heat grid of the confusion matrix."""
    k = cm.n_classes
    margin = 80
    size = margin + k * cell + 10
    peak = max(1, int(cm.counts.max()))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'font-family="monospace" font-size="12">'
    ]
    for i in range(k):
        parts.append(
            f'<text x="{margin - 6}" y="{margin + i * cell + cell // 2}" '
            f'text-anchor="end">{cm.class_names[i]}</text>'
        )
        parts.append(
            f'<text x="{margin + i * cell + cell // 2}" y="{margin - 8}" '
            f'text-anchor="middle">{cm.class_names[i]}</text>'
        )
        for j in range(k):
            v = int(cm.counts[i, j])
            shade = 255 - int(205 * v / peak)
            x, y = margin + j * cell, margin + i * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},255)" stroke="black"/>'
            )
            parts.append(
                f'<text x="{x + cell // 2}" y="{y + cell // 2 + 4}" '
                f'text-anchor="middle">{v}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report_files(
    report: EvaluationReport,
    out_dir: str,
    training_accuracy: float | None = None,
    svg: bool = False,
) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_report_text(report, training_accuracy))
    write_metrics_csv(metric_table_rows(report, training_accuracy), os.path.join(out_dir, "metrics.csv"))
    write_confusion_csv(report.confusion, os.path.join(out_dir, "confusion.csv"))
    write_roc_csv(report.roc_curves, os.path.join(out_dir, "roc.csv"))
    if svg:
        with open(os.path.join(out_dir, "confusion.svg"), "w", encoding="utf-8") as fh:
            fh.write(confusion_matrix_svg(report.confusion))
