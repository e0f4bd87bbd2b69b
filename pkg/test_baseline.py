"""
Tests for the feedforward baseline and the regularization-strength sweep.
"""
import numpy as np
import pytest

from qcl.core.exceptions import ArgumentException
from qcl.schemas.training import StageConfig
from qcl.services.autodiff.finite_difference import finite_diff_grad
from qcl.services.baseline.ffnn import FeedforwardClassifier, FfnnLayout, ffnn_fisher, ffnn_forward, ffnn_grad
from qcl.services.baseline.sweep import SWEEP_HEADER, lambda_sweep, summarize_sweep, sweep_to_csv
from qcl.services.datasets.types import Sample
from qcl.services.learning.ewc import EwcHistory
from qcl.services.learning.metrics import evaluate_accuracy
from qcl.services.learning.trainer import train_stage


def test_default_layout_parameter_count():
    assert FfnnLayout().n_params == 241
    assert FeedforwardClassifier().n_params == 241


def test_zero_weights_output_half():
    assert ffnn_forward(np.zeros(241), np.ones(10)) == pytest.approx(0.5)


def test_zero_weights_predict_class_one():
    """y = 1/2 exactly is not > 1/2, so the prediction is label 1."""
    model = FeedforwardClassifier()
    theta = np.zeros(model.n_params)
    one = Sample.from_class(np.ones(10), 1)
    zero = Sample.from_class(np.ones(10), 0)
    g = model.predict_proba(theta, one)
    assert g == (0.5, 0.5)
    assert model.predict_label(g) == 1
    assert evaluate_accuracy(model, theta, [one, one], None) == 1.0
    assert evaluate_accuracy(model, theta, [zero], None) == 0.0


def test_ffnn_label_rule_is_strict():
    model = FeedforwardClassifier(FfnnLayout(2, 2))
    assert model.predict_label((0.5000001, 0.4999999)) == 0
    assert model.predict_label((0.5, 0.5)) == 1
    assert model.predict_label((0.2, 0.8)) == 1


def test_output_increases_with_output_bias(rng):
    layout = FfnnLayout(3, 4)
    params = rng.normal(size=layout.n_params)
    x = rng.normal(size=3)
    outputs = []
    for b2 in np.linspace(-5.0, 5.0, 11):
        params[-1] = b2
        outputs.append(ffnn_forward(params, x, layout))
    assert np.all(np.diff(outputs) > 0)


def test_pack_unpack_inverse(rng):
    layout = FfnnLayout(3, 4)
    params = rng.normal(size=layout.n_params)
    np.testing.assert_array_equal(layout.pack(*layout.unpack(params)), params)


def test_layout_errors():
    with pytest.raises(ArgumentException):
        FfnnLayout(n_out=2)
    with pytest.raises(ArgumentException):
        FfnnLayout().unpack(np.zeros(10))
    with pytest.raises(ArgumentException):
        ffnn_forward(np.zeros(241), np.ones(3))


def test_two_two_one_hand_example():
    """Zero weights with b2 = ln 3 give y = 3/4."""
    layout = FfnnLayout(2, 2)
    params = np.zeros(layout.n_params)
    params[-1] = np.log(3.0)
    sample = Sample.from_class([0.3, -0.7], 0)
    assert ffnn_forward(params, sample.features, layout) == pytest.approx(0.75)
    model = FeedforwardClassifier(layout)
    assert model.loss(params, sample) == pytest.approx(-np.log(0.75))

    grad = ffnn_grad(params, sample, layout)
    w1, b1, w2, b2 = layout.unpack(grad)
    assert b2 == pytest.approx(-0.25)
    np.testing.assert_allclose(w2, [-0.125, -0.125])
    np.testing.assert_allclose(w1, 0.0)
    np.testing.assert_allclose(b1, 0.0)


@pytest.mark.parametrize("label", [0, 1])
def test_backprop_matches_finite_differences(rng, label):
    layout = FfnnLayout(4, 5)
    model = FeedforwardClassifier(layout)
    params = model.init_params(rng)
    sample = Sample.from_class(rng.normal(size=4), label)
    numeric = finite_diff_grad(lambda p: model.loss(p, sample), params, 1e-5)
    np.testing.assert_allclose(model.loss_grad_sample(params, sample), numeric, atol=1e-7)


def test_fisher_is_mean_squared_gradient(rng):
    layout = FfnnLayout(3, 2)
    params = rng.normal(size=layout.n_params)
    samples = [Sample.from_class(rng.normal(size=3), i % 2) for i in range(5)]
    expected = np.mean([ffnn_grad(params, s, layout) ** 2 for s in samples], axis=0)
    np.testing.assert_allclose(ffnn_fisher(params, samples, layout), expected, atol=1e-15)


def test_ffnn_learns_separable_task(vector_task_factory, rng):
    task = vector_task_factory(dim=2, n_train=24, n_test=10)
    model = FeedforwardClassifier(FfnnLayout(2, 4))
    config = StageConfig(epochs=150, batch_size=12, learning_rate=0.05, seed=1)
    result = train_stage(model, task, config, EwcHistory(model.n_params), model.init_params(rng))
    assert evaluate_accuracy(model, result.theta_star, task.test, task.task_kind) >= 0.8


def small_sweep_setup(vector_task_factory):
    task_a = vector_task_factory(dim=2, n_train=8, n_test=4, name="a")
    task_b = vector_task_factory(dim=2, n_train=8, n_test=4, name="b")
    stage = StageConfig(epochs=2, batch_size=4, learning_rate=0.05, seed=0)
    return task_a, task_b, (stage, stage)


def test_lambda_sweep_rows_and_summary(vector_task_factory):
    task_a, task_b, stages = small_sweep_setup(vector_task_factory)
    factory = lambda: FeedforwardClassifier(FfnnLayout(2, 3))  # noqa: E731
    rows = lambda_sweep(task_a, task_b, [0.0, 10.0], 2, factory, stages, base_seed=5)
    assert [(r.lam, r.seed) for r in rows] == [(0.0, 5), (0.0, 6), (10.0, 5), (10.0, 6)]
    for r in rows:
        assert 0.0 <= r.acc_task_a <= 1.0
        assert r.overall == pytest.approx((r.acc_task_a + r.acc_task_b) / 2)

    summary = summarize_sweep(rows)
    assert [s.lam for s in summary] == [0.0, 10.0]
    assert all(s.repeats == 2 for s in summary)
    assert summary[0].mean_acc_task_a == pytest.approx((rows[0].acc_task_a + rows[1].acc_task_a) / 2)

    lines = sweep_to_csv(rows).splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert len(lines) == 5


def test_lambda_sweep_is_thread_count_invariant(vector_task_factory):
    task_a, task_b, stages = small_sweep_setup(vector_task_factory)
    factory = lambda: FeedforwardClassifier(FfnnLayout(2, 3))  # noqa: E731
    serial = lambda_sweep(task_a, task_b, [0.0, 4.0], 2, factory, stages, threads=1)
    pooled = lambda_sweep(task_a, task_b, [0.0, 4.0], 2, factory, stages, threads=3)
    assert sweep_to_csv(serial) == sweep_to_csv(pooled)


def test_lambda_sweep_argument_errors(vector_task_factory):
    task_a, task_b, stages = small_sweep_setup(vector_task_factory)
    factory = FeedforwardClassifier
    with pytest.raises(ArgumentException):
        lambda_sweep(task_a, task_b, [1.0], 0, factory, stages)
    with pytest.raises(ArgumentException):
        lambda_sweep(task_a, task_b, [-1.0], 1, factory, stages)
