"""
Tests for analytic gradients: parameter shift, adjoint, the cross-entropy
chain rule, Fisher diagonals and the finite-difference audit.
"""
import numpy as np
import pytest

from qcl.core.exceptions import ArgumentException, StructuralException
from qcl.services.autodiff.adjoint import adjoint_proba_grad
from qcl.services.autodiff.finite_difference import finite_diff_grad
from qcl.services.autodiff.fisher import (
    EncodedSample,
    empirical_fisher,
    fisher_diagonal,
    log_likelihood_grad_sample,
    loss_grad_sample,
    sample_loss,
)
from qcl.services.autodiff.gradcheck import gradient_check, random_instance
from qcl.services.autodiff.parameter_shift import (
    energy,
    energy_gradient,
    proba_jacobian,
    shift_proba_grad,
)
from qcl.services.datasets.cluster_ising import cluster_ising_hamiltonian, ground_state_ansatz
from qcl.services.simulation.circuit import (
    Circuit,
    bind_interleaved,
    build_classifier,
    build_feature_encoding,
    compose_input_state,
    predict_proba,
)
from qcl.services.simulation.gates import GateKind
from qcl.services.simulation.ir import GateOp


def single_rx():
    return Circuit(1, (GateOp.trainable(GateKind.RX, (0,), 0),), n_params=1)


def test_shift_single_qubit_closed_form():
    circuit = single_rx()
    dg0, dg1 = shift_proba_grad(circuit, [np.pi / 2], None, None, 0)
    assert dg0 == pytest.approx(-0.5)
    assert dg1 == pytest.approx(0.5)
    assert shift_proba_grad(circuit, [0.0], None, None, 0)[0] == pytest.approx(0.0, abs=1e-15)


def test_shift_rejects_bad_index():
    with pytest.raises(StructuralException):
        shift_proba_grad(single_rx(), [0.1], None, None, 1)


def test_jacobian_matches_single_shifts(rng):
    circuit = bind_interleaved(build_classifier(3, 1, "CZ", 2), 2.0, 4)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    x = rng.uniform(-1, 1, 4)
    jac = proba_jacobian(circuit, theta, x, method="parameter_shift")
    singles = [shift_proba_grad(circuit, theta, x, None, j)[0] for j in range(circuit.n_params)]
    np.testing.assert_allclose(jac, singles, atol=1e-12)


def test_shift_matches_finite_differences_4_qubits(rng):
    circuit = build_classifier(4, 2, "CNOT", 1)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    analytic = proba_jacobian(circuit, theta, method="parameter_shift")
    numeric = finite_diff_grad(lambda th: predict_proba(circuit, th)[0], theta, 1e-4)
    np.testing.assert_allclose(analytic, numeric, atol=1e-6)


@pytest.mark.parametrize("encoding", ["interleaved", "feature", "rotation"])
def test_adjoint_agrees_with_shift(encoding):
    gen = np.random.default_rng(99)
    for n in (2, 3, 5):
        circuit, theta, x, state = random_instance(gen, encoding, n)
        shift = proba_jacobian(circuit, theta, x, state, method="parameter_shift")
        adjoint = adjoint_proba_grad(circuit, theta, x, state)
        np.testing.assert_allclose(adjoint, shift, atol=1e-8)


def test_unknown_gradient_method():
    with pytest.raises(ArgumentException):
        proba_jacobian(single_rx(), [0.2], method="backprop")


def test_finite_diff_examples():
    assert finite_diff_grad(lambda th: th[0] ** 2, [3.0], 0.5)[0] == pytest.approx(6.0)
    assert finite_diff_grad(lambda th: np.sin(th[0]), [0.0], 1e-4)[0] == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ArgumentException):
        finite_diff_grad(lambda th: 0.0, [0.0], 0.0)


def feature_sample(rng, n, label):
    state = compose_input_state(build_feature_encoding(rng.uniform(-1, 1, n)))
    return EncodedSample(label=label, x=None, input_state=state)


def test_loss_gradient_matches_finite_differences(rng):
    circuit = build_classifier(3, 1, "CNOT", 0)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    assert circuit.n_params == 9
    for label in ((1, 0), (0, 1)):
        sample = feature_sample(rng, 3, label)
        analytic = loss_grad_sample(circuit, theta, sample)
        numeric = finite_diff_grad(lambda th: sample_loss(circuit, th, sample), theta, 1e-4)
        np.testing.assert_allclose(analytic, numeric, atol=1e-6)


def test_batch_gradient_is_mean_of_sample_gradients(rng):
    circuit = build_classifier(2, 1, "CZ", 1)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    samples = [feature_sample(rng, 2, (1, 0) if i % 2 else (0, 1)) for i in range(4)]
    mean_grad = np.mean([loss_grad_sample(circuit, theta, s) for s in samples], axis=0)
    numeric = finite_diff_grad(
        lambda th: np.mean([sample_loss(circuit, th, s) for s in samples]), theta, 1e-4
    )
    np.testing.assert_allclose(mean_grad, numeric, atol=1e-6)


def test_confident_prediction_gradient_is_bounded():
    """g0 -> 1 on label (1, 0): the clamp keeps the gradient finite and tiny."""
    circuit = single_rx()
    sample = EncodedSample(label=(1, 0))
    grad = loss_grad_sample(circuit, [0.0], sample)
    assert np.all(np.isfinite(grad))
    assert abs(grad[0]) < 1e-12


def test_fisher_single_sample_is_squared_gradient(rng):
    circuit = build_classifier(2, 1, "CNOT", 0)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    sample = feature_sample(rng, 2, (0, 1))
    grad = loss_grad_sample(circuit, theta, sample)
    np.testing.assert_allclose(fisher_diagonal(circuit, theta, [sample]), grad ** 2, atol=1e-15)


def test_fisher_zero_at_stationary_point():
    """Every sample sits at a stationary point of g0 when all angles are zero on |0>."""
    circuit = single_rx()
    samples = [EncodedSample(label=(1, 0)), EncodedSample(label=(0, 1))]
    np.testing.assert_allclose(fisher_diagonal(circuit, [0.0], samples), [0.0], atol=1e-12)


def test_fisher_modes_agree(rng):
    circuit = build_classifier(3, 1, "CZ", 1)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    samples = [feature_sample(rng, 3, (1, 0) if i % 2 else (0, 1)) for i in range(5)]
    a = fisher_diagonal(circuit, theta, samples, mode="loss_gradient")
    b = fisher_diagonal(circuit, theta, samples, mode="log_likelihood")
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(
        log_likelihood_grad_sample(circuit, theta, samples[0]),
        -loss_grad_sample(circuit, theta, samples[0]),
        atol=1e-12,
    )


def test_fisher_is_permutation_invariant(rng):
    circuit = build_classifier(3, 1, "CNOT", 2)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    samples = [feature_sample(rng, 3, (1, 0) if i % 3 else (0, 1)) for i in range(6)]
    shuffled = [samples[i] for i in rng.permutation(len(samples))]
    np.testing.assert_allclose(
        fisher_diagonal(circuit, theta, shuffled), fisher_diagonal(circuit, theta, samples), atol=1e-12
    )


def test_fisher_is_thread_count_invariant(rng):
    circuit = build_classifier(3, 1, "CNOT", 0)
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    samples = [feature_sample(rng, 3, (1, 0) if i % 2 else (0, 1)) for i in range(8)]
    single = fisher_diagonal(circuit, theta, samples, threads=1)
    pooled = fisher_diagonal(circuit, theta, samples, threads=4)
    np.testing.assert_array_equal(single, pooled)


def test_fisher_rejects_empty_dataset_and_unknown_mode():
    with pytest.raises(ArgumentException):
        empirical_fisher(lambda s: s, [])
    with pytest.raises(ArgumentException):
        fisher_diagonal(single_rx(), [0.0], [EncodedSample(label=(1, 0))], mode="kfac")


@pytest.mark.parametrize("method", ["parameter_shift", "adjoint"])
def test_energy_gradient_matches_finite_differences(rng, method):
    ansatz = ground_state_ansatz(4, 1)
    hamiltonian = cluster_ising_hamiltonian(4, 0.7)
    alpha = rng.uniform(-np.pi, np.pi, ansatz.n_params)
    analytic = energy_gradient(ansatz, alpha, hamiltonian, method=method)
    numeric = finite_diff_grad(lambda a: energy(ansatz, a, hamiltonian), alpha, 1e-4)
    np.testing.assert_allclose(analytic, numeric, atol=1e-6)


def test_default_energy_gradient_equals_parameter_shift(rng):
    ansatz = ground_state_ansatz(5, 2)
    hamiltonian = cluster_ising_hamiltonian(5, 1.3)
    alpha = rng.uniform(-np.pi, np.pi, ansatz.n_params)
    np.testing.assert_allclose(
        energy_gradient(ansatz, alpha, hamiltonian),
        energy_gradient(ansatz, alpha, hamiltonian, method="parameter_shift"),
        atol=1e-10,
    )


def test_gradient_check_passes_on_all_encodings():
    report = gradient_check(n_instances=9, qubit_range=(2, 4), seed=3)
    assert report.passed
    assert len(report.instances) == 9
    assert {i.encoding for i in report.instances} == {"interleaved", "feature", "rotation"}
    assert report.summary()["max_deviation"] <= 1e-6


def test_gradient_check_catches_sign_flip():
    report = gradient_check(n_instances=3, qubit_range=(2, 3), seed=3, inject_sign_flip=True)
    assert not report.passed
    assert report.max_deviation > 1e-3


def test_gradient_check_adjoint_method():
    assert gradient_check(n_instances=3, qubit_range=(3, 3), seed=5, method="adjoint").passed


@pytest.mark.slow
def test_gradient_check_full_suite():
    report = gradient_check(n_instances=100, qubit_range=(2, 6), step=1e-4, tolerance=1e-6, seed=0)
    assert report.passed
    assert len(report.instances) >= 100
