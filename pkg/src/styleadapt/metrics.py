"""Confusion-matrix bookkeeping and intersection-over-union scoring."""

import numpy as np


class ConfusionMatrix:
    """C x C pixel tallies; counts[g][p] = pixels of truth g predicted p."""

    def __init__(self, num_classes):
        self.num_classes = num_classes
        self.counts = np.zeros((num_classes, num_classes), dtype=np.int64)

    def accumulate(self, pred, gt):
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
        c = self.num_classes
        if pred.min() < 0 or pred.max() >= c or gt.min() < 0 or gt.max() >= c:
            raise ValueError(f"label values must lie in [0, {c})")
        flat = c * gt.astype(np.int64).ravel() + pred.astype(np.int64).ravel()
        self.counts += np.bincount(flat, minlength=c * c).reshape(c, c)
        return self

    def merge(self, other):
        if other.num_classes != self.num_classes:
            raise ValueError("cannot merge matrices with different class counts")
        self.counts += other.counts
        return self

    def total(self):
        return int(self.counts.sum())


def iou(cm, score_absent_as_zero=False):
    """Per-class IoU and their mean.

    Classes whose union is empty (never seen in truth or prediction) get
    NaN and are excluded from the mean unless score_absent_as_zero is set.
    Raises if every class is absent.
    """
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    union = counts.sum(axis=0) + counts.sum(axis=1) - tp
    present = union > 0
    if not present.any():
        raise ValueError("confusion matrix is empty: all classes absent")
    per_class = np.full(cm.num_classes, np.nan)
    per_class[present] = tp[present] / union[present]
    if score_absent_as_zero:
        scored = np.where(present, per_class, 0.0)
        return per_class, float(scored.mean())
    return per_class, float(per_class[present].mean())


def pixel_accuracy(cm):
    total = cm.counts.sum()
    return float(np.diag(cm.counts).sum() / total) if total else 0.0


def iou_report_csv(cm, score_absent_as_zero=False):
    """Per-class rows plus the mean, in the `class,iou` report format."""
    per_class, miou = iou(cm, score_absent_as_zero=score_absent_as_zero)
    lines = []
    for c, v in enumerate(per_class):
        lines.append(f"{c},{'absent' if np.isnan(v) else format(v, '.6f')}")
    lines.append(f"miou,{miou:.6f}")
    return "\n".join(lines) + "\n"
