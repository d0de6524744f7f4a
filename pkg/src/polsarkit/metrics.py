"""Land-cover accuracy metrics: confusion matrix, OA, kappa, per-class scores.

Pixels carrying the ignore label on either side are excluded, since
ground truth normally covers only part of a scene.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .types import ClassMap, IGNORE_LABEL, ValidationError


@dataclass
class ConfusionMatrix:
    """k x k counts with rows = truth and columns = prediction."""

    counts: np.ndarray
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValidationError("confusion matrix must be square")
        if np.any(self.counts < 0):
            raise ValidationError("confusion counts must be non-negative")

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(pred: ClassMap, truth: ClassMap, k: int | None = None) -> ConfusionMatrix:
    """Accumulate (truth, prediction) pairs over mutually labeled pixels."""
    if pred.labels.shape != truth.labels.shape:
        raise ValidationError(
            f"prediction {pred.labels.shape} and truth {truth.labels.shape} "
            "dimensions differ"
        )
    if pred.class_names and truth.class_names and pred.class_names != truth.class_names:
        raise ValidationError("prediction and truth class schemas differ")

    sel = (pred.labels != IGNORE_LABEL) & (truth.labels != IGNORE_LABEL)
    t = truth.labels[sel].astype(np.int64)
    p = pred.labels[sel].astype(np.int64)
    names = truth.class_names or pred.class_names
    if k is None:
        k = len(names) if names else (int(max(t.max(initial=0), p.max(initial=0))) + 1 if t.size else 1)
    if t.size and (t.max() >= k or p.max() >= k):
        raise ValidationError("labels exceed the declared class count")
    counts = np.bincount(t * k + p, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts=counts, class_names=list(names))


def metrics(cm: ConfusionMatrix) -> dict:
    """Overall accuracy, kappa, and per-class precision/recall/F1/IoU.

    Per-class ratios with an empty denominator report 0.0 and are listed
    under 'undefined' so downstream consumers can tell them apart from a
    true zero score.
    """
    total = cm.total
    if total == 0:
        raise ValidationError("metrics need a non-empty confusion matrix")

    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)

    oa = float(diag.sum() / total)
    p_e = float((rows * cols).sum() / (total * total))
    kappa = 1.0 if p_e == 1.0 and oa == 1.0 else float((oa - p_e) / (1.0 - p_e))

    per_class: list[dict] = []
    undefined: list[dict] = []
    for i in range(cm.k):
        tp = diag[i]
        fp = cols[i] - tp
        fn = rows[i] - tp
        entry = {"class": cm.class_names[i] if i < len(cm.class_names) else str(i)}

        def ratio(num: float, den: float, name: str) -> float:
            if den == 0.0:
                undefined.append({"class": entry["class"], "metric": name})
                return 0.0
            return float(num / den)

        precision = ratio(tp, tp + fp, "precision")
        recall = ratio(tp, tp + fn, "recall")
        f1 = (
            ratio(2 * precision * recall, precision + recall, "f1")
            if (precision + recall) > 0
            else ratio(0.0, (tp + fp) + (tp + fn), "f1")
        )
        iou = ratio(tp, tp + fp + fn, "iou")
        entry.update(precision=precision, recall=recall, f1=f1, iou=iou)
        per_class.append(entry)

    return {
        "overall_accuracy": oa,
        "kappa": kappa,
        "per_class": per_class,
        "undefined": undefined,
        "total_pixels": total,
    }


def report_json(cm: ConfusionMatrix) -> str:
    doc = {
        "class_names": cm.class_names,
        "matrix": cm.counts.tolist(),
        "metrics": metrics(cm),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_text(cm: ConfusionMatrix) -> str:
    """Human-readable metric table."""
    m = metrics(cm)
    names = cm.class_names or [str(i) for i in range(cm.k)]
    width = max(len(n) for n in names + ["class"]) + 2
    lines = [
        f"pixels: {m['total_pixels']}",
        f"overall accuracy: {m['overall_accuracy']:.4f}",
        f"kappa: {m['kappa']:.4f}",
        "",
        f"{'class':<{width}}{'precision':>10}{'recall':>10}{'f1':>10}{'iou':>10}",
    ]
    for entry in m["per_class"]:
        lines.append(
            f"{entry['class']:<{width}}"
            f"{entry['precision']:>10.4f}{entry['recall']:>10.4f}"
            f"{entry['f1']:>10.4f}{entry['iou']:>10.4f}"
        )
    if m["undefined"]:
        flagged = ", ".join(f"{u['class']}/{u['metric']}" for u in m["undefined"])
        lines.append(f"undefined (reported as 0): {flagged}")
    return "\n".join(lines) + "\n"


__all__ = ["ConfusionMatrix", "confusion", "metrics", "report_json", "report_text"]
