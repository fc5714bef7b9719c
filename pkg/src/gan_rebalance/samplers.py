"""Baseline rebalancing: random undersampling, random oversampling, SMOTE.

All target counts use round-half-up. ``target_ratio`` is the desired
minority:majority count ratio after resampling.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import SYNTHETIC, Dataset, concat, fit_scaler, round_half_up
from .errors import DataError
from .rng import Rng

log = logging.getLogger(__name__)

METHODS = ("none", "under", "over", "smote", "gan")


@dataclass
class AugmentSpec:
    method: str = "none"
    target_ratio: float = 1.0
    smote_k: int = 5
    gan_config: object = None
    seed: int = 0
    notes: list = field(default_factory=list, compare=False)

    def validate(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError(f"target_ratio must be in (0, 1], got {self.target_ratio}")
        if self.smote_k < 1:
            raise ValueError(f"smote_k must be >= 1, got {self.smote_k}")


def minority_target(train: Dataset, ratio: float) -> int:
    return round_half_up(ratio * train.n_majority)


def _note(spec, msg):
    log.info(msg)
    spec.notes.append(msg)


def undersample(train: Dataset, spec: AugmentSpec) -> Dataset:
    """Drop majority rows (without replacement) until the target ratio holds.

    Kept rows retain their original relative order.
    """
    spec.validate()
    train.require_both_classes("undersample")
    n_keep = round_half_up(train.n_minority / spec.target_ratio)
    if n_keep >= train.n_majority:
        _note(spec, f"undersample: ratio {spec.target_ratio} already reached; unchanged")
        return train
    majority = np.flatnonzero(train.labels == 0)
    chosen = majority[Rng(spec.seed).permutation(len(majority))[:n_keep]]
    keep = np.sort(np.concatenate([chosen, np.flatnonzero(train.labels == 1)]))
    return train.subset(keep)


def _synthetic_rows(template: Dataset, features) -> Dataset:
    n = len(features)
    return Dataset(features, np.ones(n, dtype=np.int64), template.feature_names,
                   np.full(n, SYNTHETIC, dtype=object), np.full(n, -1, dtype=np.int64))


def oversample(train: Dataset, spec: AugmentSpec) -> Dataset:
    """Append duplicates of minority rows drawn with replacement."""
    spec.validate()
    train.require_both_classes("oversample")
    n_new = minority_target(train, spec.target_ratio) - train.n_minority
    if n_new <= 0:
        _note(spec, f"oversample: ratio {spec.target_ratio} already reached; unchanged")
        return train
    minority = np.flatnonzero(train.labels == 1)
    picks = minority[Rng(spec.seed).integers(len(minority), n_new)]
    return concat(train, _synthetic_rows(train, train.features[picks].copy()))


def nearest_neighbors(points, k):
    """Indices of the ``k`` nearest other points for every row.

    Euclidean distance; equal distances go to the lower row index.
    """
    sq = np.sum(points * points, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    # lexsort keys: last is primary; row index breaks ties
    cols = np.arange(len(points))
    order = np.empty((len(points), k), dtype=np.int64)
    for i in range(len(points)):
        order[i] = np.lexsort((cols, d2[i]))[:k]
    return order


def smote(train: Dataset, spec: AugmentSpec, return_provenance=False):
    """SMOTE: ``x_new = x_i + u * (x_nn - x_i)`` with ``u ~ U[0, 1)``.

    ``x_i`` is a uniformly chosen minority row and ``x_nn`` one of its
    ``min(smote_k, n_minority - 1)`` nearest minority neighbours. Neighbour
    search runs on features standardised over the whole input; interpolation
    happens in the original feature space.

    With ``return_provenance`` the result is ``(dataset, (base, neighbor, u))``
    where ``base``/``neighbor`` index the minority rows.
    """
    spec.validate()
    train.require_both_classes("smote")
    minority = np.flatnonzero(train.labels == 1)
    if len(minority) < 2:
        raise DataError(f"SMOTE needs >= 2 minority rows, got {len(minority)}; "
                        "use oversample instead")
    n_new = minority_target(train, spec.target_ratio) - len(minority)
    if n_new <= 0:
        _note(spec, f"smote: ratio {spec.target_ratio} already reached; unchanged")
        empty = np.zeros(0, dtype=np.int64)
        return (train, (empty, empty, np.zeros(0))) if return_provenance else train
    k = min(spec.smote_k, len(minority) - 1)
    x = train.features[minority]
    scaled = fit_scaler(train.features).transform(x)
    neighbors = nearest_neighbors(scaled, k)
    rng = Rng(spec.seed)
    base = rng.integers(len(minority), n_new)
    neighbor = neighbors[base, rng.integers(k, n_new)]
    u = rng.uniform(n_new)
    new = x[base] + u[:, None] * (x[neighbor] - x[base])
    out = concat(train, _synthetic_rows(train, new))
    return (out, (base, neighbor, u)) if return_provenance else out
