import math

import numpy as np
import pytest

from darkwatch import dataset, linear_models as lm, synthetic
from darkwatch.errors import DimensionMismatch, DivergenceDetected, EmptyData, NonBinaryLabel, ParameterError

from oracles import central_diff, logistic_loss, rel_error


class Data:
    def __init__(self, x, y):
        self.features = np.asarray(x, dtype=float)
        self.labels = np.asarray(y)


TOY = Data([[-1.0], [1.0]], [0, 1])
# not separable, so the unregularized optimum is finite
FIVE_X = np.array([[-2.0], [-1.0], [0.0], [1.0], [2.0]])
FIVE_Y = np.array([0, 1, 0, 1, 1])


def test_logistic_zero_model():
    x = np.random.default_rng(0).normal(size=(6, 3))
    loss, gw, gb = lm.logistic_loss_grad(np.zeros(3), 0.0, x, [0, 1, 0, 1, 1, 0], 0.0)
    assert loss == pytest.approx(math.log(2), abs=1e-15)
    assert gb == pytest.approx(0.0, abs=1e-15)


def test_logistic_single_row_gradient():
    _, gw, gb = lm.logistic_loss_grad([0.0], 0.0, [[1.0]], [1])
    assert gw.tolist() == [-0.5]
    assert gb == -0.5


def test_logistic_matches_scalar_oracle():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(7, 3))
    y = rng.integers(0, 2, 7)
    w = rng.normal(size=3)
    loss, _, _ = lm.logistic_loss_grad(w, 0.3, x, y, 0.1)
    assert loss == pytest.approx(logistic_loss(w, 0.3, x, y, 0.1), rel=1e-12)


def test_logistic_is_stable_for_huge_margins():
    loss, gw, gb = lm.logistic_loss_grad([1.0], 0.0, [[500.0], [-500.0]], [0, 1])
    assert loss == pytest.approx(500.0)
    assert np.all(np.isfinite(gw)) and math.isfinite(gb)
    s = lm.sigmoid(np.array([-800.0, 0.0, 800.0]))
    assert 0.0 <= s[0] < 1e-300 and s[1] == 0.5 and s[2] == 1.0


def test_svm_zero_model():
    loss, gw, gb = lm.svm_loss_grad(np.zeros(2), 0.0, [[1, 2], [3, 4]], [0, 1], 1.0)
    assert loss == 1.0


def test_svm_inactive_hinge():
    loss, gw, gb = lm.svm_loss_grad([1.0], 0.0, [[2.0]], [1], 0.0)
    assert (loss, gw.tolist(), gb) == (0.0, [0.0], 0.0)


def test_svm_kink_subgradient_is_zero():
    # margin exactly 1: hinge term contributes nothing to the subgradient
    _, gw, gb = lm.svm_loss_grad([1.0], 0.0, [[1.0]], [1], 0.0)
    assert (gw.tolist(), gb) == ([0.0], 0.0)


@pytest.mark.parametrize("fn", [lm.logistic_loss_grad, lm.svm_loss_grad])
def test_loss_errors(fn):
    with pytest.raises(DimensionMismatch):
        fn([0.0, 0.0], 0.0, [[1.0]], [1])
    with pytest.raises(DimensionMismatch):
        fn([0.0], 0.0, [[1.0], [2.0]], [1])
    with pytest.raises(NonBinaryLabel):
        fn([0.0], 0.0, [[1.0]], [2])


def _random_instance(rng, kind):
    n, d = rng.integers(2, 12), rng.integers(1, 6)
    while True:
        x = rng.normal(size=(n, d))
        y = rng.integers(0, 2, n)
        w = rng.normal(size=d)
        b = float(rng.normal())
        if kind == "logistic":
            return w, b, x, y
        margin = (2 * y - 1) * (x @ w + b)
        if np.all(np.abs(1 - margin) > 1e-3):
            return w, b, x, y


@pytest.mark.parametrize("kind", ["logistic", "svm"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(1234 if kind == "logistic" else 4321)
    fn = lm.logistic_loss_grad if kind == "logistic" else lm.svm_loss_grad
    worst = 0.0
    for _ in range(100):
        w, b, x, y = _random_instance(rng, kind)
        reg = float(rng.uniform(0, 0.5))
        _, gw, gb = fn(w, b, x, y, reg)
        params = np.append(w, b)
        f = lambda p: fn(p[:-1], p[-1], x, y, reg)[0]  # noqa: E731
        numeric = central_diff(f, params, 1e-6)
        worst = max(worst, rel_error(np.append(gw, gb), numeric))
    assert worst < 1e-6


def test_separable_toy_logistic():
    m = lm.train(TOY, "logistic", lm.TrainConfig(learning_rate=0.5, epochs=500, l2_strength=0.0))
    labels, _ = lm.predict(m, TOY.features)
    assert labels.tolist() == [0, 1]
    assert m.history[-1] < 0.1


def test_separable_toy_svm():
    m = lm.train(TOY, "svm", lm.TrainConfig(svm_lambda=0.01))
    labels, scores = lm.predict(m, TOY.features)
    assert labels.tolist() == [0, 1]
    assert m.weights[0] > 0


def test_five_point_grid_search():
    cfg = lm.TrainConfig(learning_rate=0.5, epochs=20000, l2_strength=0.0, tolerance=1e-15)
    m = lm.train(Data(FIVE_X, FIVE_Y), "logistic", cfg)
    trained = lm.logistic_loss_grad(m.weights, m.bias, FIVE_X, FIVE_Y, 0.0)[0]
    grid = np.round(np.arange(-1000, 1001) * 0.01, 10)
    wg, bg = np.meshgrid(grid, grid, indexing="ij")
    z = wg[..., None] * FIVE_X[:, 0] + bg[..., None]
    losses = (FIVE_Y * np.logaddexp(0, -z) + (1 - FIVE_Y) * np.logaddexp(0, z)).mean(axis=-1)
    assert trained <= losses.min() + 1e-3


def test_monotone_descent_small_lr():
    table = synthetic.threat_table(300, 5)
    data = dataset.encode(table)
    m = lm.train(data, "logistic", lm.TrainConfig(learning_rate=0.01, epochs=500, tolerance=0))
    h = np.array(m.history)
    assert np.all(np.diff(h) <= 0)


def test_training_is_deterministic():
    data = dataset.encode(synthetic.threat_table(200, 9))
    for kind in lm.KINDS:
        a = lm.train(data, kind, lm.TrainConfig(epochs=300))
        b = lm.train(data, kind, lm.TrainConfig(epochs=300))
        assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias
        assert a.history == b.history


@pytest.mark.parametrize("kind", lm.KINDS)
def test_trained_loss_beats_random_points(kind):
    data = dataset.encode(synthetic.threat_table(200, 21))
    cfg = lm.TrainConfig(learning_rate=0.5, epochs=3000)
    m = lm.train(data, kind, cfg)
    trained = lm.loss_grad(kind, m.weights, m.bias, data.features, data.labels, cfg)[0]
    rng = np.random.default_rng(0)
    for _ in range(1000):
        w = rng.normal(scale=3.0, size=m.weights.shape)
        b = float(rng.normal(scale=3.0))
        assert trained <= lm.loss_grad(kind, w, b, data.features, data.labels, cfg)[0]


def test_predict_boundary_rules():
    zero = lm.LinearModel("logistic", np.zeros(2), 0.0, lm.TrainConfig(), (0.0,))
    labels, scores = lm.predict(zero, np.ones((3, 2)))
    assert scores.tolist() == [0.5] * 3 and labels.tolist() == [1] * 3
    svm = lm.LinearModel("svm", np.array([1.0]), -1.0, lm.TrainConfig(), (0.0,))
    labels, scores = lm.predict(svm, [[2.0]])
    assert (labels.tolist(), scores.tolist()) == ([1], [1.0])
    with pytest.raises(DimensionMismatch):
        lm.predict(svm, [[1.0, 2.0]])


def test_predict_matches_external_dot_product():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(50, 4))
    for kind in lm.KINDS:
        m = lm.LinearModel(kind, rng.normal(size=4), float(rng.normal()), lm.TrainConfig(), (0.0,))
        labels, scores = lm.predict(m, x, threshold=0.3)
        z = np.array([sum(a * b for a, b in zip(row, m.weights)) + m.bias for row in x])
        if kind == "logistic":
            p = 1 / (1 + np.exp(-z))
            assert np.allclose(scores, p)
            assert labels.tolist() == [int(v >= 0.3) for v in p]
            # thresholding probabilities == thresholding margins at logit(threshold)
            assert labels.tolist() == [int(v >= math.log(0.3 / 0.7)) for v in z]
        else:
            assert labels.tolist() == [int(v >= 0) for v in z]


def test_train_errors():
    with pytest.raises(EmptyData):
        lm.train(Data([[1.0]], [1]), "logistic")
    with pytest.raises(ParameterError):
        lm.train(TOY, "tree")
    with pytest.raises(ParameterError):
        lm.train(TOY, "svm", lm.TrainConfig(svm_lambda=0.0))
    with pytest.raises(ParameterError):
        lm.TrainConfig(learning_rate=0)
    with pytest.raises(DivergenceDetected):
        lm.train(Data([[1e200], [-1e200]], [0, 1]), "svm", lm.TrainConfig(learning_rate=1e200))


def test_single_class_is_flagged():
    m = lm.train(Data([[1.0], [2.0]], [1, 1]), "logistic", lm.TrainConfig(epochs=10))
    assert m.notes == ("single-class training data",)


def test_model_round_trip():
    data = dataset.encode(synthetic.threat_table(50, 2))
    m = lm.train(data, "svm", lm.TrainConfig(epochs=20))
    doc = m.to_dict()
    assert doc["version"] == "darkwatch-model/1"
    again = lm.LinearModel.from_dict(doc)
    assert again.weights.tobytes() == m.weights.tobytes()
    assert again.encoders == m.encoders and again.scaling == m.scaling
