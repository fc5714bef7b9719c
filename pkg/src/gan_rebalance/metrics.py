"""Binary classification metrics with label 1 (minority) as the positive class."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true).reshape(-1)
    y_pred = np.asarray(y_pred).reshape(-1)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    for name, y in (("y_true", y_true), ("y_pred", y_pred)):
        if y.size and not np.isin(y, (0, 1)).all():
            raise ValueError(f"{name} contains labels other than 0/1")
    t, p = y_true == 1, y_pred == 1
    return ConfusionMatrix(tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)),
                           fn=int(np.sum(t & ~p)), tn=int(np.sum(~t & ~p)))


def _ratio(num, den):
    return num / den if den else 0.0


def scores(cm: ConfusionMatrix):
    """``(accuracy, precision, recall, f1)``; any 0/0 is reported as 0."""
    if cm.total == 0:
        raise ValueError("cannot score an empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    return accuracy, precision, recall, f1


@dataclass
class EvalReport:
    method: str
    classifier: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: ConfusionMatrix
    seeds: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    augmentation: dict = field(default_factory=dict)

    @classmethod
    def from_predictions(cls, method, classifier, y_true, y_pred, **extra):
        cm = confusion(y_true, y_pred)
        acc, prec, rec, f1 = scores(cm)
        return cls(method, classifier, acc, prec, rec, f1, cm, **extra)

    def to_dict(self):
        return asdict(self)

    def to_json(self, include_timings=True):
        d = self.to_dict()
        if not include_timings:
            d.pop("timings")
        return json.dumps(d, indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["confusion"] = ConfusionMatrix(**d["confusion"])
        return cls(**d)
