"""
Gate set and matrices.

Single-qubit matrices act on (|0>, |1>). Two-qubit tensors are indexed
[out_q0, out_q1, in_q0, in_q1] where q0 is the first qubit listed on the gate
(the control for CNOT).
"""
from enum import Enum
from math import cos, sin, sqrt
from typing import Dict

import numpy as np


class GateKind(str, Enum):
    """Supported gate kinds."""
    RX = "RX"
    RZ = "RZ"
    H = "H"
    CNOT = "CNOT"
    CZ = "CZ"
    RZZ = "RZZ"

    @property
    def n_qubits(self) -> int:
        return 2 if self in (GateKind.CNOT, GateKind.CZ, GateKind.RZZ) else 1

    @property
    def is_parametric(self) -> bool:
        return self in (GateKind.RX, GateKind.RZ, GateKind.RZZ)


PAULI: Dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Pauli generator of each parametric gate: U(θ) = exp(-iθ/2 · P)
GENERATOR: Dict[GateKind, str] = {
    GateKind.RX: "X",
    GateKind.RZ: "Z",
    GateKind.RZZ: "ZZ",
}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def h_matrix() -> np.ndarray:
    return _H


def cnot_tensor() -> np.ndarray:
    m = np.array(
        [[1, 0, 0, 0],
         [0, 1, 0, 0],
         [0, 0, 0, 1],
         [0, 0, 1, 0]],
        dtype=complex,
    )
    return m.reshape(2, 2, 2, 2)


def cz_tensor() -> np.ndarray:
    return np.diag([1, 1, 1, -1]).astype(complex).reshape(2, 2, 2, 2)


def rzz_tensor(theta: float) -> np.ndarray:
    a, b = np.exp(-0.5j * theta), np.exp(0.5j * theta)
    return np.diag([a, b, b, a]).reshape(2, 2, 2, 2)


def single_qubit_matrix(kind: GateKind, angle: float = 0.0) -> np.ndarray:
    """2x2 matrix of a single-qubit gate."""
    if kind == GateKind.RX:
        return rx_matrix(angle)
    if kind == GateKind.RZ:
        return rz_matrix(angle)
    if kind == GateKind.H:
        return h_matrix()
    raise ValueError(f"{kind} is not a single-qubit gate")


def two_qubit_tensor(kind: GateKind, angle: float = 0.0) -> np.ndarray:
    """(2, 2, 2, 2) tensor of a two-qubit gate."""
    if kind == GateKind.CNOT:
        return cnot_tensor()
    if kind == GateKind.CZ:
        return cz_tensor()
    if kind == GateKind.RZZ:
        return rzz_tensor(angle)
    raise ValueError(f"{kind} is not a two-qubit gate")
