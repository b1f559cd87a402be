"""Classifier tests: gradient checks, learnability, metrics, persistence."""

import numpy as np
import pytest

from coughpoc.errors import DivergenceError, ModelFormatError, ShapeError
from coughpoc.features import Normalizer
from coughpoc.nn import (
    CnnModel,
    MlpModel,
    TrainConfig,
    evaluate,
    gradient_check,
    load_model,
    predict_memberships,
    save_model,
    train_cnn,
    train_mlp,
)
from coughpoc.nn.metrics import metrics_from_confusion
from coughpoc.nn.predict import mean_membership


def test_mlp_requires_two_hidden_layers():
    with pytest.raises(ValueError):
        MlpModel.initialize(4, (8,), ("a", "b"))


def test_mlp_gradient_check():
    rng = np.random.default_rng(0)
    model = MlpModel.initialize(9, (12, 8), ("a", "b", "c"), seed=1)
    X = rng.normal(size=(16, 9))
    y = rng.integers(0, 3, size=16)
    err = gradient_check(model, X, y, n_samples=250, seed=2)
    assert err < 1e-4


def test_mlp_gradient_check_with_l2():
    rng = np.random.default_rng(1)
    model = MlpModel.initialize(5, (6, 6), ("a", "b"), seed=3)
    X = rng.normal(size=(10, 5))
    y = rng.integers(0, 2, size=10)
    assert gradient_check(model, X, y, l2=0.01, n_samples=200, seed=4) < 1e-4


def test_cnn_gradient_check():
    rng = np.random.default_rng(2)
    model = CnnModel.initialize(input_shape=(12, 10), conv_channels=(3, 4),
                                class_names=("a", "b"), seed=5)
    X = rng.normal(size=(4, 12, 10))
    y = rng.integers(0, 2, size=4)
    err = gradient_check(model, X, y, n_samples=250, seed=6)
    assert err < 1e-3


def test_gradient_check_empty_batch_rejected():
    model = MlpModel.initialize(4, (5, 5), ("a", "b"))
    with pytest.raises(ValueError):
        gradient_check(model, np.empty((0, 4)), np.empty(0, dtype=int))


def test_xor_learned():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    labels = ["same", "diff", "diff", "same"]
    config = TrainConfig(learning_rate=2.0, epochs=5000, batch_size=4, seed=7)
    model, losses = train_mlp(X, labels, config, hidden=(8, 8))
    preds = [predict_memberships(model, row).diagnosis for row in X]
    assert preds == labels
    assert losses[-1] < losses[0]


def test_zero_learning_rate_keeps_parameters():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 6))
    labels = ["a"] * 10 + ["b"] * 10
    config = TrainConfig(learning_rate=0.0, epochs=3, seed=8)
    model, _ = train_mlp(X, labels, config, hidden=(4, 4))
    fresh = MlpModel.initialize(6, (4, 4), ("a", "b"), seed=8)
    for (_, a), (_, b) in zip(model.parameters(), fresh.parameters()):
        assert np.array_equal(a, b)


def test_training_deterministic():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 5))
    labels = ["a", "b", "c"] * 10
    config = TrainConfig(learning_rate=0.3, epochs=20, seed=9)
    m1, l1 = train_mlp(X, labels, config)
    m2, l2 = train_mlp(X, labels, config)
    assert l1 == l2
    for (_, a), (_, b) in zip(m1.parameters(), m2.parameters()):
        assert np.array_equal(a, b)


def test_loss_curve_non_increasing():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 6))
    labels = (["a"] * 20) + (["b"] * 20)
    config = TrainConfig(learning_rate=5.0, epochs=60, seed=10)
    _, losses = train_mlp(X, labels, config, hidden=(8, 8))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_divergence_reported_with_epoch():
    labels = ["a", "b"] * 4
    nan_rows = np.array([[np.nan, 1.0], [-1.0, -1.0]] * 4)
    with pytest.raises(DivergenceError) as info:
        train_mlp(nan_rows, labels, TrainConfig(epochs=5, seed=11))
    assert info.value.epoch == 0

    inf_rows = np.array([[np.inf, 1.0], [-1.0, -1.0]] * 4)
    with pytest.raises(DivergenceError) as info:
        train_mlp(inf_rows, labels, TrainConfig(epochs=5, seed=11))
    assert info.value.epoch == 1


def test_extreme_learning_rate_stays_finite():
    # The rollback schedule keeps the recorded curve finite and non-increasing
    # even under an absurd learning rate.
    rng = np.random.default_rng(14)
    X = rng.normal(size=(16, 4))
    labels = ["a", "b"] * 8
    config = TrainConfig(learning_rate=1e9, epochs=30, seed=11)
    _, losses = train_mlp(X, labels, config, hidden=(8, 8))
    assert np.all(np.isfinite(losses))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_cnn_separable_spectrograms():
    # Two classes: energy concentrated in low vs high band rows.
    rng = np.random.default_rng(6)
    n_per = 40
    X, labels = [], []
    for _ in range(n_per):
        low = rng.normal(size=(16, 12)) * 0.1
        low[:, :4] += 2.0
        X.append(low)
        labels.append("low")
        high = rng.normal(size=(16, 12)) * 0.1
        high[:, 8:] += 2.0
        X.append(high)
        labels.append("high")
    X = np.array(X)
    order = np.random.default_rng(7).permutation(len(X))
    X, labels = X[order], [labels[i] for i in order]
    train_x, test_x = X[:60], X[60:]
    train_y, test_y = labels[:60], labels[60:]
    config = TrainConfig(learning_rate=0.5, epochs=40, batch_size=16, seed=12)
    model, _ = train_cnn(train_x, train_y, config, conv_channels=(4, 8))
    metrics = evaluate(model, test_x, test_y)
    assert metrics.accuracy >= 0.95


def test_cnn_memorizes_single_example():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(1, 12, 10))
    config = TrainConfig(learning_rate=1.0, epochs=200, batch_size=1, seed=13)
    model, losses = train_cnn(
        np.vstack([X, X * -1]), ["a", "b"], config, conv_channels=(3, 4)
    )
    assert losses[-1] < 0.05


def test_pooling_halves_dimensions():
    model = CnnModel.initialize(input_shape=(13, 11), conv_channels=(3,),
                                class_names=("a", "b"), seed=14)
    # conv 3x3 valid: 11x9, pool 2: floor -> 5x4
    assert model.dense_weight.shape[0] == 5 * 4 * 3


def test_membership_properties():
    model = MlpModel.initialize(6, (5, 5), ("a", "b", "c"), seed=15)
    x = np.random.default_rng(9).normal(size=6)
    m = predict_memberships(model, x)
    assert abs(m.values.sum() - 1.0) < 1e-6
    assert m.diagnosis == m.class_names[int(np.argmax(m.values))]

    # zeroed output layer -> uniform memberships
    model.weights[-1][...] = 0.0
    model.biases[-1][...] = 0.0
    uniform = predict_memberships(model, x)
    assert np.allclose(uniform.values, 1 / 3)

    # adding a constant to every output bias changes nothing
    model2 = MlpModel.initialize(6, (5, 5), ("a", "b", "c"), seed=15)
    before = predict_memberships(model2, x)
    model2.biases[-1][...] += 7.5
    after = predict_memberships(model2, x)
    assert np.allclose(before.values, after.values)


def test_mean_membership_normalizes():
    from coughpoc.nn.predict import MembershipVector

    a = MembershipVector(values=np.array([0.7, 0.2, 0.1]), class_names=("x", "y", "z"))
    b = MembershipVector(values=np.array([0.1, 0.8, 0.1]), class_names=("x", "y", "z"))
    m = mean_membership([a, b])
    assert abs(m.values.sum() - 1.0) < 1e-12
    assert m.diagnosis == "y"


def test_shape_errors():
    model = MlpModel.initialize(6, (5, 5), ("a", "b"), seed=16)
    with pytest.raises(ShapeError):
        model.predict_proba(np.zeros((3, 7)))
    cnn = CnnModel.initialize(input_shape=(8, 8), conv_channels=(2,),
                              class_names=("a", "b"), seed=17)
    with pytest.raises(ShapeError):
        cnn.predict_proba(np.zeros((2, 9, 8)))


def test_evaluate_closed_forms():
    model = MlpModel.initialize(4, (4, 4), ("a", "b", "c"), seed=18)
    X = np.random.default_rng(10).normal(size=(30, 4))
    preds = np.argmax(model.predict_proba(X), axis=1)
    labels = [model.class_names[i] for i in preds]
    perfect = evaluate(model, X, labels)
    assert perfect.accuracy == 1.0
    assert np.trace(perfect.confusion) == 30

    with pytest.raises(ValueError):
        evaluate(model, np.empty((0, 4)), [])


def test_metrics_from_hand_built_confusion():
    confusion = np.array([[8, 2], [1, 9]])
    metrics = metrics_from_confusion(confusion, ("pos", "neg"))
    assert metrics.sensitivity["pos"] == pytest.approx(0.8)
    assert metrics.specificity["pos"] == pytest.approx(0.9)
    assert metrics.accuracy == pytest.approx(17 / 20)


def test_constant_predictor_on_balanced_data():
    model = MlpModel.initialize(3, (4, 4), ("a", "b", "c"), seed=19)
    model.weights[-1][...] = 0.0
    model.biases[-1][...] = np.array([10.0, 0.0, 0.0])
    X = np.random.default_rng(11).normal(size=(30, 3))
    labels = ["a", "b", "c"] * 10
    metrics = evaluate(model, X, labels)
    assert metrics.accuracy == pytest.approx(1 / 3)


def test_false_alarm_rate_for_healthy():
    confusion = np.array([[10, 0, 0], [0, 10, 0], [2, 3, 5]])
    metrics = metrics_from_confusion(confusion, ("covid_like", "flu_like", "healthy"))
    # healthy specificity: TN=20 of 20 non-healthy rows predicted healthy 0 times
    assert metrics.false_alarm_rate == pytest.approx(0.0)
    confusion2 = np.array([[8, 0, 2], [0, 10, 0], [0, 0, 10]])
    metrics2 = metrics_from_confusion(confusion2, ("covid_like", "flu_like", "healthy"))
    assert metrics2.false_alarm_rate == pytest.approx(2 / 20)


def test_model_round_trip_mlp(tmp_path):
    rng = np.random.default_rng(12)
    X = rng.normal(size=(24, 5))
    labels = ["a", "b", "c"] * 8
    model, _ = train_mlp(X, labels, TrainConfig(epochs=10, seed=20))
    model.normalizer = Normalizer(mean=X.mean(axis=0), std=np.maximum(X.std(axis=0), 1e-9))
    path = tmp_path / "model.cpocm"
    save_model(model, path)
    loaded = load_model(path)
    for (_, a), (_, b) in zip(model.parameters(), loaded.parameters()):
        assert np.array_equal(a, b)
    assert loaded.class_names == model.class_names
    assert np.array_equal(loaded.normalizer.mean, model.normalizer.mean)
    assert np.array_equal(loaded.normalizer.std, model.normalizer.std)
    for row in rng.normal(size=(10, 5)):
        assert np.array_equal(model.predict_proba(row[None]), loaded.predict_proba(row[None]))


def test_model_round_trip_cnn(tmp_path):
    rng = np.random.default_rng(13)
    X = rng.normal(size=(8, 10, 8))
    labels = ["a", "b"] * 4
    model, _ = train_cnn(X, labels, TrainConfig(epochs=3, seed=21), conv_channels=(2, 3))
    path = tmp_path / "cnn.cpocm"
    save_model(model, path)
    loaded = load_model(path)
    for (_, a), (_, b) in zip(model.parameters(), loaded.parameters()):
        assert np.array_equal(a, b)
    probe = rng.normal(size=(2, 10, 8))
    assert np.array_equal(model.predict_proba(probe), loaded.predict_proba(probe))


def test_model_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.cpocm"
    path.write_bytes(b"NOTMAG" + bytes(64))
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_model_truncated_rejected(tmp_path):
    model = MlpModel.initialize(4, (3, 3), ("a", "b"), seed=22)
    path = tmp_path / "model.cpocm"
    save_model(model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 16])
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(train_fraction=0.4)
