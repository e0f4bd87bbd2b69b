"""
Dense state-vector simulation.

Amplitude layout is little-endian: bit k of the basis index is qubit k, so
``amplitudes[0b01]`` is the amplitude of qubit 0 in |1> and qubit 1 in |0>.
All public operations are value-in/value-out; internal helpers work on raw
complex128 arrays and never mutate their inputs.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException, CapacityException, StructuralException
from qcl.services.simulation.gates import (
    GENERATOR,
    PAULI,
    GateKind,
    single_qubit_matrix,
    two_qubit_tensor,
)
from qcl.services.simulation.ir import GateOp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StateVector:
    """Pure state of ``n_qubits`` qubits."""
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise StructuralException(
                f"expected {2 ** self.n_qubits} amplitudes, got shape {self.amplitudes.shape}",
                details={"n_qubits": self.n_qubits},
            )

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * prod_q P_q`` with P in {X, Y, Z}."""
    coefficient: float
    paulis: Mapping[int, str] = field(default_factory=dict)

    def key(self) -> Tuple[Tuple[int, str], ...]:
        return tuple(sorted((int(q), p.upper()) for q, p in self.paulis.items()))


@dataclass
class PauliObservable:
    """Real-weighted sum of Pauli strings."""
    terms: List[PauliTerm] = field(default_factory=list)

    @classmethod
    def single(cls, coefficient: float, paulis: Mapping[int, str]) -> "PauliObservable":
        return cls([PauliTerm(float(coefficient), dict(paulis))])

    @classmethod
    def z(cls, qubit: int) -> "PauliObservable":
        return cls.single(1.0, {qubit: "Z"})

    def max_qubit(self) -> int:
        return max((q for t in self.terms for q in t.paulis), default=-1)

    def __len__(self) -> int:
        return len(self.terms)

    def to_sparse_matrix(self, n_qubits: int) -> sparse.csr_matrix:
        """CSR matrix of the observable in the little-endian computational basis."""
        _check_observable(self, n_qubits)
        dim = 2 ** n_qubits
        idx = np.arange(dim)
        rows, cols, data = [], [], []
        for term in self.terms:
            mask, phases = _pauli_action(term.key(), n_qubits)
            rows.append(idx ^ mask)
            cols.append(idx)
            data.append(term.coefficient * phases)
        if not rows:
            return sparse.csr_matrix((dim, dim), dtype=complex)
        matrix = sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        return matrix.tocsr()


def init_zero(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` qubits."""
    if not 1 <= n_qubits <= settings.MAX_QUBITS:
        raise CapacityException(
            f"n_qubits must be in [1, {settings.MAX_QUBITS}], got {n_qubits}",
            details={"n_qubits": n_qubits},
        )
    amplitudes = np.zeros(2 ** n_qubits, dtype=complex)
    amplitudes[0] = 1.0
    return StateVector(n_qubits, amplitudes)


def from_amplitudes(amplitudes: Sequence[complex]) -> StateVector:
    """Wrap an explicit amplitude vector (length must be a power of two)."""
    arr = np.asarray(amplitudes, dtype=complex)
    n = int(round(np.log2(arr.size))) if arr.size else 0
    if arr.ndim != 1 or arr.size != 2 ** n or n < 1:
        raise StructuralException(f"amplitude vector of length {arr.size} is not 2^n")
    return StateVector(n, arr.copy())


# ---------------------------------------------------------------------------
# Raw-array kernels
# ---------------------------------------------------------------------------

def apply_1q(amps: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to ``qubit``; returns a new array."""
    psi = amps.reshape(2 ** (n - 1 - qubit), 2, 2 ** qubit)
    return np.einsum("ab,ibj->iaj", matrix, psi).reshape(-1)


def apply_diag_1q(amps: np.ndarray, d0: complex, d1: complex, qubit: int, n: int) -> np.ndarray:
    """Apply diag(d0, d1) to ``qubit``; returns a new array."""
    psi = amps.reshape(2 ** (n - 1 - qubit), 2, 2 ** qubit)
    return (psi * np.array([d0, d1]).reshape(1, 2, 1)).reshape(-1)


def apply_2q(amps: np.ndarray, tensor: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    """Apply a (2,2,2,2) gate tensor [o0, o1, i0, i1] to qubits (q0, q1)."""
    hi, lo = (q0, q1) if q0 > q1 else (q1, q0)
    psi = amps.reshape(2 ** (n - 1 - hi), 2, 2 ** (hi - lo - 1), 2, 2 ** lo)
    if q0 == hi:
        out = np.einsum("abcd,icjdk->iajbk", tensor, psi)
    else:
        out = np.einsum("abcd,idjck->ibjak", tensor, psi)
    return out.reshape(-1)


def apply_kind(amps: np.ndarray, kind: GateKind, qubits: Tuple[int, ...], angle: float, n: int) -> np.ndarray:
    """Apply one gate given its kind, qubits and resolved angle."""
    if kind == GateKind.RZ:
        return apply_diag_1q(amps, np.exp(-0.5j * angle), np.exp(0.5j * angle), qubits[0], n)
    if kind.n_qubits == 1:
        return apply_1q(amps, single_qubit_matrix(kind, angle), qubits[0], n)
    return apply_2q(amps, two_qubit_tensor(kind, angle), qubits[0], qubits[1], n)


def apply_generator(amps: np.ndarray, kind: GateKind, qubits: Tuple[int, ...], n: int) -> np.ndarray:
    """Apply the Pauli generator P of a rotation exp(-iθP/2)."""
    label = GENERATOR.get(kind)
    if label is None:
        raise StructuralException(f"{kind.value} has no Pauli generator")
    out = amps
    for q, p in zip(qubits, label):
        if p == "Z":
            out = apply_diag_1q(out, 1.0, -1.0, q, n)
        else:
            out = apply_1q(out, PAULI[p], q, n)
    return out


@lru_cache(maxsize=64)
def _pauli_action(key: Tuple[Tuple[int, str], ...], n: int) -> Tuple[int, np.ndarray]:
    """
    Bit-flip mask and per-basis phase of a Pauli string.

    P|b> = phase[b] |b ^ mask>.
    """
    idx = np.arange(2 ** n)
    mask = 0
    phases = np.ones(2 ** n, dtype=complex)
    for qubit, pauli in key:
        bit = (idx >> qubit) & 1
        if pauli == "X":
            mask |= 1 << qubit
        elif pauli == "Y":
            mask |= 1 << qubit
            phases = phases * np.where(bit == 0, 1j, -1j)
        elif pauli == "Z":
            phases = phases * np.where(bit == 0, 1.0, -1.0)
        else:
            raise StructuralException(f"unknown Pauli label {pauli!r}")
    phases.setflags(write=False)
    return mask, phases


def _check_observable(obs: PauliObservable, n_qubits: int) -> None:
    top = obs.max_qubit()
    if top >= n_qubits:
        raise StructuralException(
            f"observable acts on qubit {top} but state has {n_qubits} qubits",
            details={"n_qubits": n_qubits},
        )


def _check_qubits(qubits: Iterable[int], n_qubits: int) -> None:
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise StructuralException(
                f"qubit index {q} out of range for {n_qubits} qubits",
                details={"qubit": q, "n_qubits": n_qubits},
            )


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def apply_gate(
    state: StateVector,
    gate: GateOp,
    theta: Optional[np.ndarray] = None,
    x: Optional[np.ndarray] = None,
) -> StateVector:
    """
    Apply one gate and return the new state.

    The gate's angle slot is resolved against ``theta`` and ``x`` when it
    references them; constant-angle gates need neither.
    """
    _check_qubits(gate.qubits, state.n_qubits)
    angle = gate.angle(theta, x)
    if not np.isfinite(angle):
        raise ArgumentException(f"non-finite angle for {gate.kind.value}", details={"angle": angle})
    amps = apply_kind(state.amplitudes, gate.kind, gate.qubits, angle, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def apply_observable(state: StateVector, obs: PauliObservable) -> np.ndarray:
    """O|psi> as a raw (unnormalized) amplitude array."""
    _check_observable(obs, state.n_qubits)
    return _observable_action(state.amplitudes, obs, state.n_qubits)


def _observable_action(amps: np.ndarray, obs: PauliObservable, n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    out = np.zeros_like(amps)
    for term in obs.terms:
        mask, phases = _pauli_action(term.key(), n)
        out[idx ^ mask] += term.coefficient * phases * amps
    return out


def expectation_raw(amps: np.ndarray, obs: PauliObservable, n: int) -> float:
    """<psi|O|psi> on a raw amplitude array."""
    total = 0.0
    idx = np.arange(2 ** n)
    for term in obs.terms:
        mask, phases = _pauli_action(term.key(), n)
        if mask == 0:
            total += term.coefficient * float(np.dot(np.abs(amps) ** 2, phases.real))
        else:
            total += term.coefficient * float(np.vdot(amps[idx ^ mask], phases * amps).real)
    return total


def expectation(state: StateVector, obs: PauliObservable) -> float:
    """Exact expectation value <psi|O|psi> (no sampling)."""
    _check_observable(obs, state.n_qubits)
    return expectation_raw(state.amplitudes, obs, state.n_qubits)


def z_expectation_raw(amps: np.ndarray, qubit: int, n: int) -> float:
    probs = (np.abs(amps) ** 2).reshape(2 ** (n - 1 - qubit), 2, 2 ** qubit).sum(axis=(0, 2))
    return float(probs[0] - probs[1])


def projector_probability_raw(amps: np.ndarray, qubit: int, outcome: int, n: int) -> float:
    probs = (np.abs(amps) ** 2).reshape(2 ** (n - 1 - qubit), 2, 2 ** qubit).sum(axis=(0, 2))
    return float(probs[outcome] / probs.sum())


def projector_probability(state: StateVector, qubit: int, outcome: int) -> float:
    """<psi| |outcome><outcome|_qubit |psi>."""
    _check_qubits([qubit], state.n_qubits)
    if outcome not in (0, 1):
        raise ArgumentException(f"outcome must be 0 or 1, got {outcome}")
    return projector_probability_raw(state.amplitudes, qubit, outcome, state.n_qubits)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    if a.n_qubits != b.n_qubits:
        raise StructuralException("fidelity of states with different qubit counts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
