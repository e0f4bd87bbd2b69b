"""
Parameter-shift derivatives of circuit outputs.

Every trainable gate is a Pauli rotation exp(-i a P / 2), so

    d<O>/da = (<O>(a + pi/2) - <O>(a - pi/2)) / 2

holds exactly. The shift acts on the total gate angle; for interleaved slots
``c*x_i + theta_j`` this is the theta_j derivative since d(angle)/d(theta_j) = 1.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException, StructuralException
from qcl.services.autodiff.adjoint import adjoint_expectation_grad, adjoint_proba_grad
from qcl.services.simulation.circuit import Circuit, _check_inputs, predict_proba, run_ops
from qcl.services.simulation.statevector import (
    PauliObservable,
    StateVector,
    apply_kind,
    expectation_raw,
    init_zero,
    projector_probability_raw,
)

logger = logging.getLogger(__name__)

SHIFT = np.pi / 2
GRADIENT_METHODS = ("parameter_shift", "adjoint")


def _resolve_method(method: Optional[str], default: str) -> str:
    method = (method or default).lower()
    if method not in GRADIENT_METHODS:
        raise ArgumentException(
            f"unknown gradient method {method!r}", details={"allowed": list(GRADIENT_METHODS)}
        )
    return method


def shift_proba_grad(
    circuit: Circuit,
    theta: Sequence[float],
    x: Optional[Sequence[float]],
    input_state: Optional[StateVector],
    j: int,
) -> Tuple[float, float]:
    """
    (dg0/dtheta_j, dg1/dtheta_j) from two shifted circuit evaluations.

    Raises:
        StructuralException: if ``j`` is not a trainable parameter index
    """
    th, xs = _check_inputs(circuit, theta, x, input_state)
    if not 0 <= j < circuit.n_params:
        raise StructuralException(
            f"parameter index {j} out of range [0, {circuit.n_params})",
            details={"j": j},
        )
    plus = th.copy()
    plus[j] += SHIFT
    minus = th.copy()
    minus[j] -= SHIFT
    g_plus = predict_proba(circuit, plus, xs, input_state)
    g_minus = predict_proba(circuit, minus, xs, input_state)
    return 0.5 * (g_plus[0] - g_minus[0]), 0.5 * (g_plus[1] - g_minus[1])


def _shift_jacobian(
    circuit: Circuit, th: np.ndarray, xs: np.ndarray, input_state: Optional[StateVector]
) -> np.ndarray:
    # The unshifted prefix is shared; each shift replays only the suffix.
    n, m = circuit.n_qubits, circuit.readout_qubit
    amps = (input_state if input_state is not None else init_zero(n)).amplitudes
    grad = np.zeros(circuit.n_params)
    for pos, op in enumerate(circuit.ops):
        angle = op.angle(th, xs)
        j = op.param_index
        if j is not None:
            suffix = circuit.ops[pos + 1:]
            g0 = []
            for shift in (SHIFT, -SHIFT):
                out = apply_kind(amps, op.kind, op.qubits, angle + shift, n)
                out = run_ops(out, suffix, th, xs, n)
                g0.append(projector_probability_raw(out, m, 0, n))
            grad[j] = 0.5 * (g0[0] - g0[1])
        amps = apply_kind(amps, op.kind, op.qubits, angle, n)
    return grad


def proba_jacobian(
    circuit: Circuit,
    theta: Sequence[float],
    x: Optional[Sequence[float]] = None,
    input_state: Optional[StateVector] = None,
    method: Optional[str] = None,
) -> np.ndarray:
    """
    dg0/dtheta for every parameter; dg1 is its negation.

    Args:
        method: "parameter_shift" (default from settings) or "adjoint"
    """
    method = _resolve_method(method, settings.GRADIENT_METHOD)
    if method == "adjoint":
        return adjoint_proba_grad(circuit, theta, x, input_state)
    th, xs = _check_inputs(circuit, theta, x, input_state)
    return _shift_jacobian(circuit, th, xs, input_state)


def energy(
    circuit: Circuit,
    theta: Sequence[float],
    hamiltonian: PauliObservable,
    input_state: Optional[StateVector] = None,
) -> float:
    """<psi(theta)|H|psi(theta)> for a data-free ansatz."""
    th, xs = _check_inputs(circuit, theta, None, input_state)
    n = circuit.n_qubits
    start = input_state if input_state is not None else init_zero(n)
    amps = run_ops(start.amplitudes, circuit.ops, th, xs, n)
    return expectation_raw(amps, hamiltonian, n)


def energy_gradient(
    circuit: Circuit,
    theta: Sequence[float],
    hamiltonian: PauliObservable,
    method: Optional[str] = None,
    matrix: Optional[sparse.spmatrix] = None,
) -> np.ndarray:
    """
    d<H>/dtheta for a data-free ansatz.

    ``matrix`` may carry a precomputed sparse form of ``hamiltonian`` for the
    adjoint path.
    """
    method = _resolve_method(method, settings.VQE_GRADIENT_METHOD)
    if method == "adjoint":
        h_matrix = matrix if matrix is not None else hamiltonian.to_sparse_matrix(circuit.n_qubits)
        return adjoint_expectation_grad(circuit, theta, None, None, lambda psi: h_matrix @ psi)

    th, _ = _check_inputs(circuit, theta, None, None)
    grad = np.zeros(circuit.n_params)
    for j in range(circuit.n_params):
        plus = th.copy()
        plus[j] += SHIFT
        minus = th.copy()
        minus[j] -= SHIFT
        grad[j] = 0.5 * (energy(circuit, plus, hamiltonian) - energy(circuit, minus, hamiltonian))
    return grad
