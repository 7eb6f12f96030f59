"""Confusion-matrix statistics (accuracy, precision, sensitivity, F1,
specificity) and rank-based AUC. BWV is the positive class throughout."""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError

METRIC_NAMES = ("ac", "pr", "se", "f1", "sp", "auc")
UNDEFINED = "—"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for k in ("tp", "fp", "fn", "tn"):
            v = getattr(self, k)
            if int(v) != v or v < 0:
                raise InvalidInputError(f"{k} must be a non-negative count, got {v!r}")

    @property
    def positives(self):
        return self.tp + self.fn

    @property
    def negatives(self):
        return self.fp + self.tn

    @property
    def total(self):
        return self.positives + self.negatives

    @classmethod
    def from_predictions(cls, predicted, reference, positive=0):
        """Count outcomes of ``predicted`` against ``reference`` (class indices)."""
        predicted = np.asarray(predicted)
        reference = np.asarray(reference)
        if predicted.shape != reference.shape or predicted.ndim != 1:
            raise InvalidInputError(
                f"prediction and reference lists differ in length ({predicted.shape} vs {reference.shape})")
        pp, rp = predicted == positive, reference == positive
        return cls(tp=int(np.sum(pp & rp)), fp=int(np.sum(pp & ~rp)),
                   fn=int(np.sum(~pp & rp)), tn=int(np.sum(~pp & ~rp)))


@dataclass
class MetricReport:
    """Ratios in [0, 1]; ``None`` marks an undefined metric, see ``undefined``."""

    ac: float = None
    pr: float = None
    se: float = None
    f1: float = None
    sp: float = None
    auc: float = None
    undefined: dict = field(default_factory=dict)

    def as_percentages(self):
        return {k: None if getattr(self, k) is None else round(100 * getattr(self, k), 2)
                for k in METRIC_NAMES}


def _ratio(num, den):
    return None if den == 0 else num / den


def compute_metrics(cm):
    if cm.total == 0:
        raise InvalidInputError("confusion matrix is empty")
    rep = MetricReport(
        ac=(cm.tp + cm.tn) / cm.total,
        pr=_ratio(cm.tp, cm.tp + cm.fp),
        se=_ratio(cm.tp, cm.tp + cm.fn),
        f1=_ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn),
        sp=_ratio(cm.tn, cm.fp + cm.tn),
    )
    reasons = {
        "pr": "no positive predictions (TP + FP = 0)",
        "se": "no positive references (TP + FN = 0)",
        "f1": "no positives predicted or present (2TP + FP + FN = 0)",
        "sp": "no negative references (FP + TN = 0)",
    }
    for key, why in reasons.items():
        if getattr(rep, key) is None:
            rep.undefined[key] = why
    return rep


def auc(scores, labels):
    """Mann-Whitney AUC: probability that a positive (label 1) outscores a
    negative (label 0), ties counted half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InvalidInputError("scores and labels must be 1-D and of equal length")
    if not np.isin(labels, (0, 1)).all():
        raise InvalidInputError("labels must be binary (0/1)")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise InvalidInputError("AUC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def balanced_point_auc(cm):
    """Single-operating-point diagnostic (SE + SP) / 2. Not a ROC area."""
    rep = compute_metrics(cm)
    if rep.se is None or rep.sp is None:
        return None
    return (rep.se + rep.sp) / 2


def _fmt(v):
    return UNDEFINED if v is None else f"{100 * v:.2f}"


def report(cm, scores=None, labels=None):
    """One table row "AC PR SE F1 SP AUC" in percent, with footnotes for
    undefined cells on following lines.

    ``scores`` are BWV-class scores and ``labels`` the matching class indices
    (1 = BWV) when an AUC cell is wanted.
    """
    rep = compute_metrics(cm)
    if scores is not None:
        rep.auc = auc(scores, labels)
    row = " ".join(_fmt(getattr(rep, k)) for k in METRIC_NAMES)
    notes = [f"* {k.upper()} undefined: {why}" for k, why in rep.undefined.items()]
    return "\n".join([row] + notes)
