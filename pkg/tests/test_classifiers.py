import itertools

import numpy as np
import pytest

from gan_rebalance.classifiers import (ClassifierSpec, Forest, best_split, build_network,
                                       predict, predict_proba, train_classifier)
from gan_rebalance.dataset import Dataset, SynthBenchConfig, make_synthetic
from gan_rebalance.errors import DataError, ShapeError
from gan_rebalance.nn import grad_check
from gan_rebalance.rng import Rng
from tests.conftest import make_imbalanced

XOR = Dataset([[0, 0], [0, 1], [1, 0], [1, 1]], [0, 1, 1, 0], ["a", "b"])


def separable(n=200, seed=0):
    r = Rng(seed)
    y = np.arange(n) % 2
    x = r.normal(2 * n).reshape(n, 2) + np.where(y[:, None] == 1, 3.0, -3.0) / np.sqrt(2)
    return Dataset(x, y, ["a", "b"])


@pytest.mark.parametrize("kind", ["logreg", "mlp", "forest"])
def test_separable_training_accuracy(kind):
    ds = separable()
    clf = train_classifier(ds, ClassifierSpec(kind=kind, epochs=50, forest_trees=10))
    assert np.mean(predict(clf, ds.features) == ds.labels) > 0.99


def test_logreg_zero_epochs_is_half():
    clf = train_classifier(separable(), ClassifierSpec(kind="logreg", epochs=0))
    p = predict_proba(clf, Rng(1).normal(20).reshape(10, 2))
    assert np.array_equal(p, np.full(10, 0.5))
    assert len(clf.trace) == 0


def stump_accuracy(x, y, f, thr, left_label, right_label):
    pred = np.where(x[:, f] <= thr, left_label, right_label)
    return np.mean(pred == y)


def test_xor_depth_one_cannot_beat_three_quarters():
    x, y = XOR.features, XOR.labels
    # every stump: feature, threshold between or outside the values, both leaf labels
    oracle = max(stump_accuracy(x, y, f, t, a, b) for f, t, a, b
                 in itertools.product((0, 1), (-0.5, 0.5, 1.5), (0, 1), (0, 1)))
    assert oracle <= 0.75
    spec = ClassifierSpec(kind="forest", forest_trees=1, forest_max_depth=1,
                          forest_feature_frac=1.0, forest_bootstrap=False)
    clf = train_classifier(XOR, spec)
    assert np.mean(predict(clf, x) == y) <= oracle


def test_xor_depth_two_is_perfect():
    spec = ClassifierSpec(kind="forest", forest_trees=1, forest_max_depth=2,
                          forest_feature_frac=1.0, forest_bootstrap=False)
    clf = train_classifier(XOR, spec)
    assert np.array_equal(predict(clf, XOR.features), XOR.labels)
    assert clf.model.trees[0].depth == 2


def test_best_split_ties_and_midpoints():
    x = np.array([[0.0, 5.0], [1.0, 6.0], [2.0, 7.0], [3.0, 8.0]])
    y = np.array([0, 0, 1, 1])
    f, thr, imp = best_split(x, y, np.array([0, 1]))
    assert (f, thr, imp) == (0, 1.5, 0.0)
    assert best_split(np.ones((3, 1)), np.array([0, 1, 0]), np.array([0])) is None


def test_threshold_rules():
    clf = train_classifier(separable(), ClassifierSpec(kind="logreg", epochs=0))
    x = np.zeros((3, 2))
    assert np.all(predict(clf, x) == 1)  # 0.5 >= 0.5
    x = Rng(2).normal(40).reshape(20, 2)
    trained = train_classifier(separable(), ClassifierSpec(kind="logreg", epochs=5))
    assert np.all(predict(trained, x, threshold=0.0) == 1)
    p = predict_proba(trained, x)
    assert np.all(p < 1)
    assert np.all(predict(trained, x, threshold=1.0) == 0)


@pytest.mark.parametrize("kind", ["logreg", "mlp", "forest"])
def test_proba_contracts(kind):
    clf = train_classifier(make_imbalanced(60, 15), ClassifierSpec(kind=kind, epochs=3,
                                                                   forest_trees=5))
    assert predict_proba(clf, np.zeros((0, 3))).shape == (0,)
    p = predict_proba(clf, 50 * Rng(0).normal(300).reshape(100, 3))
    assert np.all((p >= 0) & (p <= 1))
    with pytest.raises(ShapeError):
        predict_proba(clf, np.zeros((2, 4)))


def test_single_class_training_rejected():
    ds = Dataset(np.zeros((4, 2)), [1, 1, 1, 1], ["a", "b"])
    with pytest.raises(DataError):
        train_classifier(ds, ClassifierSpec())


def test_forest_deterministic_and_order_invariant():
    ds = make_imbalanced(80, 20)
    spec = ClassifierSpec(kind="forest", forest_trees=15, forest_max_depth=4, seed=3)
    a, b = train_classifier(ds, spec), train_classifier(ds, spec)
    x = Rng(5).normal(90).reshape(30, 3)
    assert np.array_equal(predict_proba(a, x), predict_proba(b, x))
    shuffled = Forest(list(reversed(a.model.trees)))
    assert np.array_equal(shuffled.predict_proba(x), a.model.predict_proba(x))


def test_mlp_classifier_gradients():
    spec = ClassifierSpec(mlp_hidden=[6, 4])
    net = build_network("mlp", 3, spec, Rng(0))
    x = Rng(1).normal(15).reshape(5, 3)
    assert grad_check(net, x, "bce", np.array([[1], [0], [0], [1], [1]], float)) < 1e-4


@pytest.mark.parametrize("kind", ["logreg", "mlp"])
def test_training_loss_decreases_on_benchmark(kind):
    train, _ = make_synthetic(SynthBenchConfig(n_features=5, n_train=600, n_test=100,
                                               imbalance_ratio=0.1))
    clf = train_classifier(train, ClassifierSpec(kind=kind, epochs=20))
    assert len(clf.trace) == 20
    assert clf.trace.mean_loss[-1] < clf.trace.mean_loss[0]


def test_spec_validation():
    for bad in (dict(kind="svm"), dict(lr=0), dict(forest_trees=0),
                dict(forest_feature_frac=1.5), dict(mlp_hidden=[0])):
        with pytest.raises(ValueError):
            ClassifierSpec(**bad).validate()
    assert ClassifierSpec().features_per_split(20) == 4
    assert ClassifierSpec().features_per_split(1) == 1
