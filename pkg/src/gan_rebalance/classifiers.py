"""Downstream classifiers: logistic regression, MLP, random forest.

Gradient-trained kinds minimise mean binary cross-entropy with minibatch
SGD (no class weights). The forest is bagged Gini trees with a fresh random
feature subset at every split.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, round_half_up
from .errors import ShapeError, TrainingError
from .nn import MlpNetwork, bce_loss, build_mlp, mlp_backward, mlp_forward, sgd_step
from .rng import Rng, derive_seed

KINDS = ("logreg", "mlp", "forest")


@dataclass
class ClassifierSpec:
    kind: str = "mlp"
    mlp_hidden: list = field(default_factory=lambda: [32, 16])
    lr: float = 1e-2
    epochs: int = 200
    batch_size: int = 64
    forest_trees: int = 100
    forest_max_depth: int = 8
    # None means sqrt(n_features) / n_features
    forest_feature_frac: float | None = None
    forest_bootstrap: bool = True
    threshold: float = 0.5
    seed: int = 0

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; choose from {KINDS}")
        for name in ("batch_size", "forest_trees", "forest_max_depth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.forest_feature_frac is not None and not 0 < self.forest_feature_frac <= 1:
            raise ValueError("forest_feature_frac must be in (0, 1]")
        if any(w < 1 for w in self.mlp_hidden):
            raise ValueError("hidden widths must be >= 1")

    def features_per_split(self, n_features):
        frac = self.forest_feature_frac
        if frac is None:
            frac = math.sqrt(n_features) / n_features
        return min(n_features, max(1, round_half_up(frac * n_features)))


# --- decision trees ------------------------------------------------------

@dataclass
class Tree:
    """Flat arrays; node 0 is the root. Leaves have ``feature == -1``."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    vote: np.ndarray

    def apply(self, x):
        node = np.zeros(len(x), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nd = node[rows]
            go_left = x[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, x):
        return self.vote[self.apply(x)]

    @property
    def depth(self):
        depth = np.zeros(len(self.feature), dtype=np.int64)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())


def gini(n_pos, n):
    p = n_pos / n
    return 2.0 * p * (1.0 - p)


def best_split(x, y, features):
    """Lowest weighted Gini over ``features`` (ascending) and midpoint thresholds.

    Ties keep the earlier feature, then the lower threshold. Returns
    ``(feature, threshold, impurity)`` or ``None`` when no feature varies.
    """
    n = len(y)
    best = None
    for f in features:
        order = np.argsort(x[:, f], kind="stable")
        xs, ys = x[order, f], y[order]
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        pos = np.cumsum(ys)[cut]
        n_left = cut + 1.0
        n_right = n - n_left
        pos_right = ys.sum() - pos
        pl, pr = pos / n_left, pos_right / n_right
        impurity = (n_left * 2.0 * pl * (1.0 - pl) + n_right * 2.0 * pr * (1.0 - pr)) / n
        j = int(np.argmin(impurity))
        if best is None or impurity[j] < best[2]:
            best = (int(f), 0.5 * (xs[cut[j]] + xs[cut[j] + 1]), float(impurity[j]))
    return best


def build_tree(x, y, max_depth, n_split_features, rng: Rng) -> Tree:
    """Greedy depth-first growth.

    A node splits while it is impure, below ``max_depth`` and some candidate
    feature varies; a zero-gain split is still taken (XOR-like data needs
    it). Leaves vote 1 when at least half their rows are positive.
    """
    feature, threshold, left, right, vote = [], [], [], [], []
    d = x.shape[1]

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        vote.append(0)
        return len(feature) - 1

    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        n_pos = int(ys.sum())
        vote[node] = int(2 * n_pos >= len(ys))
        if depth >= max_depth or n_pos == 0 or n_pos == len(ys):
            continue
        features = np.sort(rng.permutation(d)[:n_split_features])
        split = best_split(x[idx], ys, features)
        if split is None:
            continue
        f, thr, _ = split
        mask = x[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(), new_node()
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], idx[~mask], depth + 1))
        stack.append((left[node], idx[mask], depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(vote, dtype=np.int64))


@dataclass
class Forest:
    trees: list

    def predict_proba(self, x):
        votes = np.zeros(len(x))
        for tree in self.trees:
            votes += tree.predict(x)
        return votes / len(self.trees)


def train_forest(x, y, spec: ClassifierSpec) -> Forest:
    n, d = x.shape
    m = spec.features_per_split(d)
    trees = []
    for t in range(spec.forest_trees):
        # per-tree stream: tree t is the same whatever order trees are built in
        rng = Rng(derive_seed(spec.seed, t))
        idx = rng.integers(n, n) if spec.forest_bootstrap else np.arange(n)
        trees.append(build_tree(x[idx], y[idx], spec.forest_max_depth, m, rng))
    return Forest(trees)


# --- gradient-trained models ---------------------------------------------

@dataclass
class LossTrace:
    epoch: list = field(default_factory=list)
    mean_loss: list = field(default_factory=list)

    def __len__(self):
        return len(self.epoch)

    def write_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "mean_loss"])
            for e, v in zip(self.epoch, self.mean_loss):
                w.writerow([e, f"{v:.17g}"])


def bce_gradients(net: MlpNetwork, x, y):
    """Mean BCE on ``(x, y)`` and its parameter gradients."""
    p, cache = mlp_forward(net, x)
    value, dp = bce_loss(p, y.reshape(-1, 1).astype(np.float64))
    return value, mlp_backward(net, cache, dp)


def fit_sgd(net: MlpNetwork, x, y, spec: ClassifierSpec, rng: Rng) -> LossTrace:
    trace = LossTrace()
    n = len(y)
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        losses = []
        for b, start in enumerate(range(0, n, spec.batch_size)):
            idx = order[start:start + spec.batch_size]
            value, grads = bce_gradients(net, x[idx], y[idx])
            if not np.isfinite(value):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}",
                                    epoch=epoch, batch=b)
            sgd_step(net, grads, spec.lr)
            losses.append(value)
        trace.epoch.append(epoch)
        trace.mean_loss.append(float(np.mean(losses)))
    return trace


def build_network(kind, n_features, spec: ClassifierSpec, rng: Rng) -> MlpNetwork:
    if kind == "logreg":
        return build_mlp([n_features, 1], "identity", "sigmoid", rng, zero_init=True)
    return build_mlp([n_features, *spec.mlp_hidden, 1], "leaky_relu", "sigmoid", rng)


# --- public surface -------------------------------------------------------

@dataclass
class TrainedClassifier:
    kind: str
    model: object
    n_features: int
    threshold: float = 0.5
    trace: LossTrace = field(default_factory=LossTrace)
    spec: ClassifierSpec = None


def train_classifier(train: Dataset, spec: ClassifierSpec) -> TrainedClassifier:
    spec.validate()
    train.require_both_classes("classifier training")
    x, y = train.features, train.labels
    if spec.kind == "forest":
        model = train_forest(x, y, spec)
        trace = LossTrace()
    else:
        rng = Rng(spec.seed)
        model = build_network(spec.kind, train.n_features, spec, rng.spawn("init"))
        trace = fit_sgd(model, x, y, spec, rng.spawn("batches"))
    return TrainedClassifier(spec.kind, model, train.n_features, spec.threshold, trace, spec)


def predict_proba(clf: TrainedClassifier, features):
    x = np.asarray(features, dtype=np.float64)
    if x.size == 0:
        return np.zeros(0)
    if x.ndim != 2 or x.shape[1] != clf.n_features:
        got = x.shape[1] if x.ndim == 2 else x.shape
        raise ShapeError(f"features have {got} columns, classifier expects {clf.n_features}")
    if clf.kind == "forest":
        return clf.model.predict_proba(x)
    return clf.model(x).ravel()


def predict(clf: TrainedClassifier, features, threshold=None):
    """Label 1 iff probability >= threshold."""
    t = clf.threshold if threshold is None else threshold
    return (predict_proba(clf, features) >= t).astype(np.int64)


def spec_dict(spec: ClassifierSpec) -> dict:
    return asdict(spec)
