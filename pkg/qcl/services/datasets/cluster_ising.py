"""
Cluster-Ising chain with open boundaries:

    H(h) = - sum_{j=1}^{N-2} X_{j-1} Z_j X_{j+1} + h sum_{j=0}^{N-2} Y_j Y_{j+1}

(0-indexed qubits). The SPT phase (h < 1) is detected by the string order
parameter O_z; the antiferromagnetic phase (h > 1) has O_z -> 0.
"""
import logging
import threading
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException, CapacityException
from qcl.services.autodiff.parameter_shift import energy, energy_gradient
from qcl.services.datasets.types import PrepMethod, StateRecipe
from qcl.services.simulation.circuit import Circuit, build_classifier, evaluate
from qcl.services.simulation.statevector import (
    PauliObservable,
    PauliTerm,
    StateVector,
    expectation,
)
from qcl.utils.json_logger import performance_logger

logger = logging.getLogger(__name__)


def cluster_ising_hamiltonian(n: int, h: float) -> PauliObservable:
    """(n-2) cluster terms with coefficient -1 then (n-1) Ising terms with coefficient h."""
    if n < 3:
        raise ArgumentException(f"cluster-Ising chain needs n >= 3, got {n}")
    terms = [PauliTerm(-1.0, {j - 1: "X", j: "Z", j + 1: "X"}) for j in range(1, n - 1)]
    terms += [PauliTerm(float(h), {j: "Y", j + 1: "Y"}) for j in range(n - 1)]
    return PauliObservable(terms)


def _check_diag_capacity(n: int) -> None:
    limit = (
        settings.EXACT_DIAG_EXTENDED_MAX_QUBITS
        if settings.ALLOW_EXTENDED_DIAG
        else settings.EXACT_DIAG_MAX_QUBITS
    )
    if n > limit:
        raise CapacityException(
            f"exact diagonalization limited to {limit} qubits, got {n}",
            details={"n": n, "allow_extended": settings.ALLOW_EXTENDED_DIAG},
        )


@lru_cache(maxsize=128)
def _ground_state_cached(n: int, h: float) -> Tuple[float, np.ndarray]:
    ham = cluster_ising_hamiltonian(n, h).to_sparse_matrix(n)
    if n <= settings.EXACT_DIAG_MAX_QUBITS:
        evals, evecs = linalg.eigh(ham.toarray(), subset_by_index=[0, 0])
    else:
        evals, evecs = sparse_linalg.eigsh(ham, k=1, which="SA")
    psi = np.ascontiguousarray(evecs[:, 0], dtype=complex)
    psi /= np.linalg.norm(psi)
    psi.setflags(write=False)
    return float(evals[0]), psi


def exact_ground_state(n: int, h: float) -> Tuple[float, StateVector]:
    """
    Lowest eigenpair of H(h).

    Dense Hermitian eigensolve up to EXACT_DIAG_MAX_QUBITS, sparse Lanczos
    beyond that when ALLOW_EXTENDED_DIAG is set.
    """
    if n < 3:
        raise ArgumentException(f"cluster-Ising chain needs n >= 3, got {n}")
    _check_diag_capacity(n)
    e0, psi = _ground_state_cached(int(n), float(h))
    return e0, StateVector(n, psi.copy())


def string_order(state: StateVector) -> float:
    """O_z = (-1)^N <X_0 Y_1 Z_2 ... Z_{N-3} Y_{N-2} X_{N-1}>."""
    n = state.n_qubits
    if n < 4:
        raise ArgumentException(f"string order needs n >= 4, got {n}")
    paulis = {0: "X", 1: "Y", n - 2: "Y", n - 1: "X"}
    paulis.update({k: "Z" for k in range(2, n - 2)})
    sign = -1.0 if n % 2 else 1.0
    return sign * expectation(state, PauliObservable.single(1.0, paulis))


def string_order_thermodynamic(h: float) -> float:
    """Infinite-chain value (1 - h^2)^(3/4) for |h| < 1, else 0."""
    return float((1.0 - h * h) ** 0.75) if abs(h) < 1.0 else 0.0


def ground_state_ansatz(n: int, n_blocks: Optional[int] = None) -> Circuit:
    """Three rotation layers and two CZ layers per block."""
    return build_classifier(n, n_blocks or settings.VQE_BLOCKS, entangler="CZ")


@dataclass
class VariationalResult:
    alpha_star: np.ndarray
    state: StateVector
    energy: float
    iterations: int
    converged: bool
    energy_trace: List[float] = field(default_factory=list)


def _descend(
    ansatz: Circuit,
    hamiltonian: PauliObservable,
    alpha: np.ndarray,
    max_iters: int,
    lr: float,
    tolerance: float,
    window: int,
    method: Optional[str],
) -> Tuple[np.ndarray, float, int, bool, List[float]]:
    h_matrix = hamiltonian.to_sparse_matrix(ansatz.n_qubits)
    best_alpha, best_energy = alpha.copy(), np.inf
    trace: List[float] = []
    for it in range(1, max_iters + 1):
        e = energy(ansatz, alpha, hamiltonian)
        trace.append(e)
        if e < best_energy:
            best_alpha, best_energy = alpha.copy(), e
        if len(trace) > window and abs(trace[-1] - trace[-1 - window]) < tolerance:
            return best_alpha, best_energy, it, True, trace
        alpha = alpha - lr * energy_gradient(ansatz, alpha, hamiltonian, method, h_matrix)
    return best_alpha, best_energy, max_iters, False, trace


def variational_ground_prep(
    n: int,
    h: float,
    n_blocks: Optional[int] = None,
    max_iters: Optional[int] = None,
    lr: Optional[float] = None,
    seed: int = 0,
    tolerance: Optional[float] = None,
    window: Optional[int] = None,
    method: Optional[str] = None,
    n_restarts: int = 1,
) -> VariationalResult:
    """
    Gradient descent on <H(h)> over the ground-state ansatz.

    Converged once |E_t - E_{t-window}| < tolerance. Without convergence the
    best state seen is returned and a warning is logged. With ``n_restarts`` > 1
    the lowest-energy restart wins.
    """
    max_iters = max_iters or settings.VQE_MAX_ITERS
    lr = lr or settings.VQE_LEARNING_RATE
    tolerance = tolerance or settings.VQE_TOLERANCE
    window = window or settings.VQE_WINDOW
    ansatz = ground_state_ansatz(n, n_blocks)
    hamiltonian = cluster_ising_hamiltonian(n, h)
    rng = np.random.default_rng(seed)
    started = time.time()

    best: Optional[VariationalResult] = None
    for restart in range(max(1, n_restarts)):
        alpha0 = rng.uniform(-np.pi, np.pi, ansatz.n_params)
        alpha, e, iters, converged, trace = _descend(
            ansatz, hamiltonian, alpha0, max_iters, lr, tolerance, window, method
        )
        logger.debug(
            f"Variational prep n={n} h={h:.4f} restart={restart}: E={e:.6f} "
            f"after {iters} iterations (converged={converged})"
        )
        if best is None or e < best.energy:
            best = VariationalResult(alpha, evaluate(ansatz, alpha), e, iters, converged, trace)

    assert best is not None
    if not best.converged:
        logger.warning(
            f"Variational prep n={n} h={h:.4f} did not converge in {max_iters} iterations; "
            f"returning best energy {best.energy:.6f}"
        )
    performance_logger.log_operation(
        "variational_ground_prep",
        (time.time() - started) * 1000,
        success=best.converged,
        metadata={"n": n, "h": h, "energy": best.energy, "iterations": best.iterations},
    )
    return best


_variational_cache: Dict[Tuple, StateVector] = {}
_variational_lock = threading.Lock()


def materialize_state(recipe: StateRecipe) -> StateVector:
    """
    Ground state described by ``recipe``.

    Exact recipes use the eigensolver; variational recipes replay alpha* through
    the ansatz, running the preparation first when alpha* is missing.
    """
    if recipe.prep == PrepMethod.EXACT:
        return exact_ground_state(recipe.n_qubits, recipe.h)[1]
    if recipe.alpha is not None:
        n_blocks = recipe.alpha.size // (3 * recipe.n_qubits)
        if n_blocks * 3 * recipe.n_qubits != recipe.alpha.size:
            raise ArgumentException(
                f"alpha of length {recipe.alpha.size} does not fit a {recipe.n_qubits}-qubit ansatz"
            )
        return evaluate(ground_state_ansatz(recipe.n_qubits, n_blocks), recipe.alpha)
    key = recipe.cache_key()
    with _variational_lock:
        cached = _variational_cache.get(key)
    if cached is None:
        cached = variational_ground_prep(recipe.n_qubits, recipe.h).state
        with _variational_lock:
            _variational_cache[key] = cached
    return cached
