"""Tabular binary datasets: CSV I/O, scaling, splitting, synthetic benchmark.

Label 1 is the minority (high-risk) class throughout. Every row carries a
stable integer ``row_id`` so that pipelines can prove which rows reached
which stage; synthetic rows get ids of -1.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .rng import Rng

REAL = "real"
SYNTHETIC = "synthetic"
STD_FLOOR = 1e-9


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list
    row_origin: np.ndarray = None
    row_id: np.ndarray = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            self.features = self.features.reshape(len(self.features), -1)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        n = len(self.features)
        if self.row_origin is None:
            self.row_origin = np.full(n, REAL, dtype=object)
        else:
            self.row_origin = np.asarray(self.row_origin, dtype=object)
        if self.row_id is None:
            self.row_id = np.arange(n, dtype=np.int64)
        else:
            self.row_id = np.asarray(self.row_id, dtype=np.int64)
        self.feature_names = list(self.feature_names)
        if len(self.labels) != n or len(self.row_origin) != n or len(self.row_id) != n:
            raise DataError(f"row count mismatch: {n} feature rows, {len(self.labels)} "
                            f"labels, {len(self.row_origin)} origins, {len(self.row_id)} ids")
        if len(self.feature_names) != self.features.shape[1]:
            raise DataError(f"{len(self.feature_names)} feature names for "
                            f"{self.features.shape[1]} columns")
        if n and not np.isin(self.labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_minority(self):
        return int(np.sum(self.labels == 1))

    @property
    def n_majority(self):
        return int(np.sum(self.labels == 0))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names,
                       self.row_origin[idx], self.row_id[idx])

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels.copy(), self.feature_names,
                       self.row_origin.copy(), self.row_id.copy())

    def minority(self) -> "Dataset":
        return self.subset(np.flatnonzero(self.labels == 1))

    def require_both_classes(self, what="operation"):
        if self.n_minority == 0 or self.n_majority == 0:
            raise DataError(f"{what} needs both classes; got {self.n_majority} majority "
                            f"and {self.n_minority} minority rows")


def concat(*parts: Dataset) -> Dataset:
    names = parts[0].feature_names
    for p in parts[1:]:
        if p.feature_names != names:
            raise DataError("cannot concatenate datasets with different feature names")
    return Dataset(np.vstack([p.features for p in parts]),
                   np.concatenate([p.labels for p in parts]), names,
                   np.concatenate([p.row_origin for p in parts]),
                   np.concatenate([p.row_id for p in parts]))


def imbalance_ratio(ds: Dataset) -> float:
    """Minority count over majority count."""
    return ds.n_minority / ds.n_majority if ds.n_majority else math.inf


# --- CSV ---------------------------------------------------------------

def load_csv(path, label_column: str) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels = [], []
        # row numbers are 1-based data rows (header excluded)
        for rownum, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(record)} cells, "
                                f"header has {len(header)}")
            values = []
            for i, cell in enumerate(record):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: non-numeric value {cell!r} at row {rownum}, "
                                    f"column {header[i]!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: non-finite value at row {rownum}, "
                                    f"column {header[i]!r}")
                if i == label_idx:
                    if v not in (0.0, 1.0):
                        raise DataError(f"{path}: label {cell!r} at row {rownum} "
                                        "is not 0 or 1")
                    labels.append(int(v))
                else:
                    values.append(v)
            rows.append(values)
    features = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(features, labels, names)


def write_csv(ds: Dataset, path, label_column: str = "label"):
    """Reals are written with 17 significant digits, which round-trips exactly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [label_column])
        for x, y in zip(ds.features, ds.labels):
            w.writerow([f"{v:.17g}" for v in x] + [str(int(y))])


# --- scaling -----------------------------------------------------------

@dataclass
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse_transform(self, x):
        return np.asarray(x, dtype=np.float64) * self.std + self.mean


def fit_scaler(features) -> ScalerParams:
    """Population (ddof=0) mean and std, std floored at 1e-9."""
    features = np.asarray(features, dtype=np.float64)
    if len(features) == 0:
        raise DataError("cannot fit a scaler on an empty dataset")
    mean = features.mean(axis=0)
    # constant columns: use the exact value so centring gives exact zeros
    const = features.min(axis=0) == features.max(axis=0)
    mean[const] = features[0, const]
    return ScalerParams(mean, np.maximum(features.std(axis=0), STD_FLOOR))


def standardize(ds: Dataset):
    """Returns ``(standardized dataset, scaler)``."""
    scaler = fit_scaler(ds.features)
    return ds.with_features(scaler.transform(ds.features)), scaler


# --- splitting ---------------------------------------------------------

def stratified_split(ds: Dataset, test_fraction: float, seed: int):
    """Per class, ``round_half_up(count * test_fraction)`` rows go to test.

    Both outputs keep the input's relative row order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = Rng(seed)
    test_idx = []
    for cls in (0, 1):
        idx = np.flatnonzero(ds.labels == cls)
        if len(idx) < 2:
            raise DataError(f"class {cls} has {len(idx)} rows; stratified split needs >= 2")
        n_test = round_half_up(len(idx) * test_fraction)
        test_idx.append(idx[rng.permutation(len(idx))[:n_test]])
    test_mask = np.zeros(len(ds), dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    return ds.subset(np.flatnonzero(~test_mask)), ds.subset(np.flatnonzero(test_mask))


# --- synthetic benchmark -----------------------------------------------

@dataclass
class SynthBenchConfig:
    n_features: int = 20
    n_train: int = 5000
    n_test: int = 2000
    imbalance_ratio: float = 0.05
    class_separation: float = 2.0
    seed: int = 0

    def minority_counts(self):
        return (round_half_up(self.n_train * self.imbalance_ratio),
                round_half_up(self.n_test * self.imbalance_ratio))

    def validate(self):
        if self.n_features < 1:
            raise DataError("n_features must be >= 1")
        if not 0.0 < self.imbalance_ratio < 1.0:
            raise DataError("imbalance_ratio must be in (0, 1)")
        if self.class_separation < 0:
            raise DataError("class_separation must be >= 0")
        m_train, m_test = self.minority_counts()
        if m_train < 2:
            raise DataError(f"config yields {m_train} minority training rows; need >= 2")
        if m_test < 1 or self.n_test - m_test < 1 or self.n_train - m_train < 1:
            raise DataError("config yields an empty class in train or test")


def minority_distribution(n_features: int, separation: float):
    """Mean and per-feature std of the minority class.

    The mean is ``separation`` times the unit diagonal direction, so its norm
    equals ``separation``. Standard deviations ramp linearly from ``1 - c``
    to ``1 + c`` across features with ``c = min(0.5, separation / 4)``; the
    covariance is the diagonal of their squares. Zero separation therefore
    gives two identical distributions.
    """
    mean = np.full(n_features, separation / math.sqrt(n_features))
    c = min(0.5, separation / 4.0)
    std = np.linspace(1.0 - c, 1.0 + c, n_features) if n_features > 1 else np.ones(1)
    return mean, std


def make_synthetic(cfg: SynthBenchConfig):
    """Majority rows ~ N(0, I), minority rows ~ N(mean, diag(std**2)).

    Returns ``(train, test)``. Row ids run 0..n_train-1 for train and continue
    through the test rows, so they are unique across both.
    """
    cfg.validate()
    rng = Rng(cfg.seed)
    mean, std = minority_distribution(cfg.n_features, cfg.class_separation)
    names = [f"x{i}" for i in range(cfg.n_features)]
    parts = []
    offset = 0
    for n, n_min in ((cfg.n_train, cfg.minority_counts()[0]),
                     (cfg.n_test, cfg.minority_counts()[1])):
        d = cfg.n_features
        maj = rng.normal((n - n_min) * d).reshape(n - n_min, d)
        mino = mean + std * rng.normal(n_min * d).reshape(n_min, d)
        labels = np.r_[np.zeros(n - n_min, dtype=np.int64), np.ones(n_min, dtype=np.int64)]
        order = rng.permutation(n)
        x = np.vstack([maj, mino])[order]
        parts.append(Dataset(x, labels[order], names,
                             row_id=np.arange(offset, offset + n, dtype=np.int64)))
        offset += n
    return parts[0], parts[1]
