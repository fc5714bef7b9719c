"""End-to-end experiment: data -> split -> scale -> augment -> train -> evaluate.

Only the training split is ever scaled-on, augmented or trained-on; the test
split is transformed with the training scaler and used once, for scoring.
"""
from __future__ import annotations

import csv
import json
import logging
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifiers, samplers
from .dataset import (REAL, SYNTHETIC, Dataset, fit_scaler, load_csv, make_synthetic,
                      stratified_split)
from .errors import ConfigError, DataError, GanRebalanceError, TrainingError
from .gan import augment_with_gan
from .metrics import EvalReport

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("method", "classifier", "seed", "acc", "f1", "precision", "recall")
TABLE_COLUMNS = ("method", "classifier", "n_ok", "n_failed", "acc_mean", "acc_median",
                 "f1_mean", "f1_median")


@dataclass
class Audit:
    """Row ids seen by each stage (synthetic rows carry id -1)."""
    test_ids: np.ndarray = None
    scaler_fit_ids: np.ndarray = None
    augment_input_ids: np.ndarray = None
    classifier_input_ids: np.ndarray = None

    def leaked(self) -> dict:
        test = set(self.test_ids.tolist())
        out = {}
        for name in ("scaler_fit_ids", "augment_input_ids", "classifier_input_ids"):
            ids = set(getattr(self, name).tolist()) - {-1}
            out[name] = sorted(ids & test)
        return out


@dataclass
class PipelineResult:
    report: EvalReport
    audit: Audit
    augmented: Dataset
    gan_trace: object = None
    clf_trace: object = None
    files: dict = field(default_factory=dict)


@contextmanager
def _stage(name, timings):
    start = time.perf_counter()
    try:
        yield
    except (ConfigError, DataError, TrainingError) as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except ValueError as exc:
        raise DataError(f"[{name}] {exc}") from exc
    finally:
        timings[name] = round(time.perf_counter() - start, 6)


def load_data(cfg):
    """``(train, test)`` in raw feature scale."""
    if cfg.data_csv is not None:
        ds = load_csv(cfg.data_csv, cfg.label_column)
        return stratified_split(ds, cfg.test_fraction, cfg.stage_seed("split"))
    return make_synthetic(cfg.synth)


def augment(train: Dataset, spec: samplers.AugmentSpec):
    """Apply ``spec.method``; returns ``(dataset, gan trace or None)``."""
    if spec.method == "none":
        return train, None
    if spec.method == "under":
        return samplers.undersample(train, spec), None
    if spec.method == "over":
        return samplers.oversample(train, spec), None
    if spec.method == "smote":
        return samplers.smote(train, spec), None
    if spec.method == "gan":
        return augment_with_gan(train, spec)
    raise ConfigError(f"unknown method {spec.method!r}")


def augmentation_summary(before: Dataset, after: Dataset, notes) -> dict:
    return {
        "before": {"majority": before.n_majority, "minority": before.n_minority},
        "after": {"majority": after.n_majority, "minority": after.n_minority,
                  "real": int(np.sum(after.row_origin == REAL)),
                  "synthetic": int(np.sum(after.row_origin == SYNTHETIC))},
        "notes": list(notes),
    }


def run_pipeline(cfg, out_dir=None) -> PipelineResult:
    """Run one configuration; writes report files when ``out_dir`` is given."""
    cfg.validate()
    rcfg = cfg.resolved()
    timings = {}
    audit = Audit()

    with _stage("data", timings):
        train, test = load_data(rcfg)
        train.require_both_classes("training split")
        audit.test_ids = test.row_id.copy()
    with _stage("standardize", timings):
        audit.scaler_fit_ids = train.row_id.copy()
        scaler = fit_scaler(train.features)
        train = train.with_features(scaler.transform(train.features))
        test = test.with_features(scaler.transform(test.features))
    with _stage("augment", timings):
        audit.augment_input_ids = train.row_id.copy()
        augmented, gan_trace = augment(train, rcfg.augment)
    with _stage("train", timings):
        audit.classifier_input_ids = augmented.row_id.copy()
        clf = classifiers.train_classifier(augmented, rcfg.classifier)
    with _stage("evaluate", timings):
        y_pred = classifiers.predict(clf, test.features)
        report = EvalReport.from_predictions(
            rcfg.augment.method, rcfg.classifier.kind, test.labels, y_pred,
            seeds=rcfg.seeds_used(), config=cfg.to_flat(), timings=timings,
            augmentation=augmentation_summary(train, augmented, rcfg.augment.notes))

    result = PipelineResult(report, audit, augmented, gan_trace,
                            clf.trace if len(clf.trace) else None)
    if out_dir is not None:
        result.files = write_outputs(result, Path(out_dir))
    return result


def write_outputs(result: PipelineResult, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = {"report": out / "report.json", "augmentation": out / "augmentation.json"}
    files["report"].write_text(result.report.to_json(), encoding="utf-8")
    files["augmentation"].write_text(
        json.dumps(result.report.augmentation, indent=2) + "\n", encoding="utf-8")
    if result.gan_trace is not None:
        files["gan_trace"] = out / "gan_trace.csv"
        result.gan_trace.write_csv(files["gan_trace"])
    if result.clf_trace is not None:
        files["clf_trace"] = out / "clf_trace.csv"
        result.clf_trace.write_csv(files["clf_trace"])
    return files


# --- method x seed matrix ---------------------------------------------------

def _ordered_methods(methods):
    return [m for m in samplers.METHODS if m in methods]


def _run_cell(args):
    cfg, out_dir = args
    try:
        report = run_pipeline(cfg, out_dir).report
        return report, None
    except GanRebalanceError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_matrix(base, methods=None, seeds=None, out_dir=None, jobs=1):
    """Cross product of methods and seeds.

    Returns ``(rows, table, failures)``: ``rows`` is one dict per successful
    cell (summary.csv), ``table`` aggregates per method (table.csv). Rows are
    ordered none, under, over, smote, gan, then by seed, whatever ``jobs``.
    """
    methods = _ordered_methods(methods if methods is not None else base.methods)
    seeds = list(seeds if seeds is not None else base.seeds)
    out = Path(out_dir) if out_dir is not None else None
    cells = [(m, s) for m in methods for s in seeds]
    tasks = [(base.with_overrides(seed=s, method=m),
              out / "cells" / f"{m}-seed{s}" if out else None) for m, s in cells]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]

    rows, failures = [], []
    for (m, s), (report, err) in zip(cells, results):
        if report is None:
            log.warning("cell %s/seed %s failed: %s", m, s, err)
            failures.append({"method": m, "seed": s, "error": err})
            continue
        rows.append({"method": m, "classifier": report.classifier, "seed": s,
                     "acc": report.accuracy, "f1": report.f1,
                     "precision": report.precision, "recall": report.recall})
    table = []
    for m in methods:
        mine = [r for r in rows if r["method"] == m]
        n_failed = sum(1 for f in failures if f["method"] == m)
        accs, f1s = [r["acc"] for r in mine], [r["f1"] for r in mine]
        table.append({
            "method": m, "classifier": base.classifier.kind,
            "n_ok": len(mine), "n_failed": n_failed,
            "acc_mean": statistics.fmean(accs) if mine else float("nan"),
            "acc_median": statistics.median(accs) if mine else float("nan"),
            "f1_mean": statistics.fmean(f1s) if mine else float("nan"),
            "f1_median": statistics.median(f1s) if mine else float("nan"),
        })
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "summary.csv", SUMMARY_COLUMNS, rows)
        _write_rows(out / "table.csv", TABLE_COLUMNS, table)
        if failures:
            _write_rows(out / "failures.csv", ("method", "seed", "error"), failures)
    return rows, table, failures


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def _write_rows(path, columns, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
