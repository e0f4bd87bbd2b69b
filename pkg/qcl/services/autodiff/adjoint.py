"""
Adjoint-state gradients: one forward sweep and one backward sweep.

Optional fast path; the test suite holds it to parameter-shift within 1e-8.
"""
import logging
from typing import Callable, Optional, Sequence

import numpy as np

from qcl.services.simulation.circuit import Circuit, _check_inputs, run_ops
from qcl.services.simulation.statevector import (
    StateVector,
    apply_diag_1q,
    apply_generator,
    apply_kind,
    init_zero,
)

logger = logging.getLogger(__name__)


def adjoint_expectation_grad(
    circuit: Circuit,
    theta: Sequence[float],
    x: Optional[Sequence[float]],
    input_state: Optional[StateVector],
    observable_action: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """
    d<O>/dtheta_j for every trainable parameter.

    Args:
        observable_action: maps a raw amplitude array psi to O psi
    """
    th, xs = _check_inputs(circuit, theta, x, input_state)
    n = circuit.n_qubits
    start = input_state if input_state is not None else init_zero(n)
    psi = run_ops(start.amplitudes, circuit.ops, th, xs, n)
    lam = observable_action(psi)

    grad = np.zeros(circuit.n_params)
    for op in reversed(circuit.ops):
        angle = op.angle(th, xs)
        j = op.param_index
        if j is not None:
            mu = apply_generator(psi, op.kind, op.qubits, n)
            # 2 Re <lam| (-i/2) P |psi>
            grad[j] = float(np.vdot(lam, mu).imag)
        psi = apply_kind(psi, op.kind, op.qubits, -angle, n)
        lam = apply_kind(lam, op.kind, op.qubits, -angle, n)
    return grad


def adjoint_proba_grad(
    circuit: Circuit,
    theta: Sequence[float],
    x: Optional[Sequence[float]] = None,
    input_state: Optional[StateVector] = None,
) -> np.ndarray:
    """dg0/dtheta_j for all j, using g0 = (1 + <Z_m>) / 2."""
    n, m = circuit.n_qubits, circuit.readout_qubit
    dz = adjoint_expectation_grad(
        circuit, theta, x, input_state, lambda psi: apply_diag_1q(psi, 1.0, -1.0, m, n)
    )
    return 0.5 * dz
