"""Shared fixtures: seeded generators, dense-matrix oracles and small tasks."""
import logging
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from qcl.services.datasets.types import Sample, TaskDataset, TaskKind  # noqa: E402
from qcl.services.simulation.gates import GateKind  # noqa: E402

logging.basicConfig(
    level=logging.WARNING,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = {"X": X, "Y": Y, "Z": Z}


def embed(factors, n):
    """Kronecker product with qubit n-1 leftmost (little-endian basis)."""
    out = np.array([[1.0 + 0j]])
    for q in reversed(range(n)):
        out = np.kron(out, factors.get(q, I2))
    return out


def dense_gate(op, theta, x, n):
    angle = op.angle(theta, x)
    q = op.qubits
    if op.kind == GateKind.RX:
        return embed({q[0]: expm(-0.5j * angle * X)}, n)
    if op.kind == GateKind.RZ:
        return embed({q[0]: expm(-0.5j * angle * Z)}, n)
    if op.kind == GateKind.H:
        return embed({q[0]: HAD}, n)
    if op.kind == GateKind.CNOT:
        return embed({q[0]: P0}, n) + embed({q[0]: P1, q[1]: X}, n)
    if op.kind == GateKind.CZ:
        return embed({q[0]: P0}, n) + embed({q[0]: P1, q[1]: Z}, n)
    if op.kind == GateKind.RZZ:
        return expm(-0.5j * angle * embed({q[0]: Z, q[1]: Z}, n))
    raise AssertionError(op.kind)


def dense_circuit(circuit, theta=None, x=None):
    """Full 2^n x 2^n unitary of a circuit, built gate by gate from Kronecker products."""
    n = circuit.n_qubits
    theta = np.asarray(theta if theta is not None else [], dtype=float)
    x = np.asarray(x if x is not None else [], dtype=float)
    u = np.eye(2 ** n, dtype=complex)
    for op in circuit.ops:
        u = dense_gate(op, theta, x, n) @ u
    return u


def dense_pauli(paulis, n):
    return embed({q: PAULIS[p] for q, p in paulis.items()}, n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def oracle():
    """Dense-matrix oracles for cross-checking the simulator."""
    class Oracle:
        circuit = staticmethod(dense_circuit)
        gate = staticmethod(dense_gate)
        pauli = staticmethod(dense_pauli)
        embed = staticmethod(embed)

    return Oracle


def make_vector_task(rng, dim, n_train, n_test, kind=TaskKind.PCA_10, name="toy", scale=1.0):
    """Two separable Gaussian blobs along the first coordinate."""
    def draw(count):
        samples = []
        for i in range(count):
            label = i % 2
            x = rng.normal(scale=0.1, size=dim) * scale
            x[0] += scale * (0.8 if label == 0 else -0.8)
            samples.append(Sample.from_class(x, label))
        return samples

    return TaskDataset(draw(n_train), draw(n_test), kind, name)


@pytest.fixture
def vector_task_factory(rng):
    return lambda dim=4, n_train=12, n_test=6, **kw: make_vector_task(rng, dim, n_train, n_test, **kw)
