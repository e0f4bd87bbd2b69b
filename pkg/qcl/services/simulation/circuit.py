"""
Circuit representation, ansatz builders and data encodings.

Trainable parameters are numbered in circuit op order. Entangling layers pair
adjacent qubits on an open line: (0,1),(2,3),... then (1,2),(3,4),...
CNOT control is always the lower index.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import StructuralException
from qcl.services.simulation.gates import GateKind
from qcl.services.simulation.ir import GateOp
from qcl.services.simulation.statevector import (
    StateVector,
    apply_kind,
    init_zero,
    projector_probability_raw,
    z_expectation_raw,
)

logger = logging.getLogger(__name__)

ROTATION_ORDERS = {
    ("RX", "RZ", "RX"),
    ("RZ", "RX", "RZ"),
}


@dataclass(frozen=True)
class Circuit:
    """Ordered gate program with trainable and data slots."""
    n_qubits: int
    ops: Tuple[GateOp, ...]
    n_params: int = 0
    n_features: int = 0
    readout_qubit: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_qubits < 1:
            raise StructuralException(f"circuit needs at least one qubit, got {self.n_qubits}")
        if not 0 <= self.readout_qubit < self.n_qubits:
            raise StructuralException(
                f"readout qubit {self.readout_qubit} out of range for {self.n_qubits} qubits"
            )
        seen = np.zeros(self.n_params, dtype=int)
        for op in self.ops:
            for q in op.qubits:
                if not 0 <= q < self.n_qubits:
                    raise StructuralException(
                        f"{op.kind.value} on qubit {q} exceeds {self.n_qubits} qubits"
                    )
            slot = op.angle_slot
            if slot is None:
                continue
            if slot.param_index is not None:
                if not 0 <= slot.param_index < self.n_params:
                    raise StructuralException(
                        f"param index {slot.param_index} outside [0, {self.n_params})"
                    )
                seen[slot.param_index] += 1
            if slot.data_index is not None and not 0 <= slot.data_index < self.n_features:
                raise StructuralException(
                    f"data index {slot.data_index} outside [0, {self.n_features})"
                )
        if self.n_params and not np.all(seen == 1):
            missing = np.flatnonzero(seen != 1).tolist()[:10]
            raise StructuralException(
                "every trainable parameter must belong to exactly one gate",
                details={"offending_params": missing},
            )

    @property
    def rotation_ops(self) -> List[int]:
        """Op positions of trainable gates in circuit order."""
        return [i for i, op in enumerate(self.ops) if op.param_index is not None]

    def param_position(self, j: int) -> int:
        """Op position of the gate owning trainable parameter ``j``."""
        if not 0 <= j < self.n_params:
            raise StructuralException(f"parameter {j} out of range [0, {self.n_params})")
        for i, op in enumerate(self.ops):
            if op.param_index == j:
                return i
        raise StructuralException(f"parameter {j} not bound to any gate")

    def gate_counts(self) -> dict:
        counts: dict = {}
        for op in self.ops:
            counts[op.kind.value] = counts.get(op.kind.value, 0) + 1
        return counts


def _entangling_pairs(n_qubits: int) -> List[Tuple[int, int]]:
    even = [(q, q + 1) for q in range(0, n_qubits - 1, 2)]
    odd = [(q, q + 1) for q in range(1, n_qubits - 1, 2)]
    return even + odd


def build_classifier(
    n_qubits: int,
    n_blocks: int,
    entangler: str = "CNOT",
    readout_qubit: int = 0,
    rotation_order: Optional[Sequence[str]] = None,
) -> Circuit:
    """
    Hardware-efficient classifier: per block three rotation layers then two
    entangling layers.

    Args:
        n_qubits: Number of qubits on the line
        n_blocks: Number of blocks (>= 1)
        entangler: "CNOT" or "CZ"
        readout_qubit: Qubit measured in the Z basis
        rotation_order: Axis of each rotation layer, default from settings

    Returns:
        Circuit with 3 * n_qubits * n_blocks trainable parameters
    """
    order = tuple(s.upper() for s in (rotation_order or settings.ROTATION_ORDER))
    if order not in ROTATION_ORDERS:
        raise StructuralException(f"unsupported rotation order {order}")
    if n_blocks < 1 or n_qubits < 1:
        raise StructuralException(f"invalid sizes: n_qubits={n_qubits}, n_blocks={n_blocks}")
    if not 0 <= readout_qubit < n_qubits:
        raise StructuralException(f"readout qubit {readout_qubit} out of range for {n_qubits} qubits")
    try:
        ent = GateKind(entangler.upper())
    except ValueError:
        raise StructuralException(f"unknown entangler {entangler!r}")
    if ent not in (GateKind.CNOT, GateKind.CZ):
        raise StructuralException(f"entangler must be CNOT or CZ, got {entangler!r}")

    ops: List[GateOp] = []
    p = 0
    for _ in range(n_blocks):
        for axis in order:
            for q in range(n_qubits):
                ops.append(GateOp.trainable(GateKind(axis), (q,), p))
                p += 1
        for a, b in _entangling_pairs(n_qubits):
            ops.append(GateOp.fixed(ent, (a, b)))

    circuit = Circuit(n_qubits, tuple(ops), n_params=p, n_features=0, readout_qubit=readout_qubit)
    logger.debug(
        f"Built classifier: qubits={n_qubits}, blocks={n_blocks}, entangler={ent.value}, "
        f"params={p}"
    )
    return circuit


def bind_interleaved(circuit: Circuit, c: float, n_encoded: int) -> Circuit:
    """
    Attach data slots to the first ``n_encoded`` trainable rotations.

    Gate i (in circuit order) gets angle ``c * x_i + theta_j``; later rotations
    keep ``theta_j`` only.
    """
    if not 0 <= n_encoded <= circuit.n_params:
        raise StructuralException(
            f"cannot encode {n_encoded} features into {circuit.n_params} rotation gates",
            details={"n_encoded": n_encoded, "n_params": circuit.n_params},
        )
    ops = list(circuit.ops)
    for i, pos in enumerate(circuit.rotation_ops[:n_encoded]):
        op = ops[pos]
        ops[pos] = replace(op, angle_slot=op.angle_slot.with_data(float(c), i))
    return replace(circuit, ops=tuple(ops), n_features=n_encoded)


def build_feature_encoding(x: Sequence[float], t: Optional[float] = None) -> Circuit:
    """
    U_z(x) H U_z(x) H with nearest-neighbour ZZ terms on a line.

    U_z(x) = exp(-i/2 [sum_i x_i Z_i + t sum_i x_i x_{i+1} Z_i Z_{i+1}]).
    """
    t = settings.FEATURE_ENCODING_T if t is None else t
    xs = np.asarray(x, dtype=float)
    n = xs.size
    ops: List[GateOp] = []
    for _ in range(2):
        ops.extend(GateOp.fixed(GateKind.H, (q,)) for q in range(n))
        ops.extend(GateOp.fixed(GateKind.RZ, (q,), xs[q]) for q in range(n))
        ops.extend(
            GateOp.fixed(GateKind.RZZ, (q, q + 1), t * xs[q] * xs[q + 1]) for q in range(n - 1)
        )
    return Circuit(n, tuple(ops))


def build_rotation_encoding(x: Sequence[float]) -> Circuit:
    """Rx(x_i) on qubit i followed by a CNOT brick on adjacent pairs."""
    xs = np.asarray(x, dtype=float)
    n = xs.size
    ops = [GateOp.fixed(GateKind.RX, (q,), xs[q]) for q in range(n)]
    ops.extend(GateOp.fixed(GateKind.CNOT, pair) for pair in _entangling_pairs(n))
    return Circuit(n, tuple(ops))


def run_ops(
    amps: np.ndarray,
    ops: Sequence[GateOp],
    theta: Optional[np.ndarray],
    x: Optional[np.ndarray],
    n: int,
) -> np.ndarray:
    """Apply ``ops`` in order to a raw amplitude array."""
    for op in ops:
        amps = apply_kind(amps, op.kind, op.qubits, op.angle(theta, x), n)
    return amps


def _check_inputs(
    circuit: Circuit,
    theta: Optional[Sequence[float]],
    x: Optional[Sequence[float]],
    input_state: Optional[StateVector],
) -> Tuple[np.ndarray, np.ndarray]:
    th = np.asarray(theta if theta is not None else [], dtype=float)
    xs = np.asarray(x if x is not None else [], dtype=float)
    if th.shape != (circuit.n_params,):
        raise StructuralException(
            f"theta has length {th.size}, circuit expects {circuit.n_params}"
        )
    if xs.shape != (circuit.n_features,):
        raise StructuralException(
            f"x has length {xs.size}, circuit expects {circuit.n_features}"
        )
    if input_state is not None and input_state.n_qubits != circuit.n_qubits:
        raise StructuralException(
            f"input state has {input_state.n_qubits} qubits, circuit has {circuit.n_qubits}"
        )
    return th, xs


def evaluate(
    circuit: Circuit,
    theta: Optional[Sequence[float]] = None,
    x: Optional[Sequence[float]] = None,
    input_state: Optional[StateVector] = None,
) -> StateVector:
    """Output state of ``circuit`` applied to ``input_state`` (default |0...0>)."""
    th, xs = _check_inputs(circuit, theta, x, input_state)
    start = input_state if input_state is not None else init_zero(circuit.n_qubits)
    amps = run_ops(start.amplitudes, circuit.ops, th, xs, circuit.n_qubits)
    return StateVector(circuit.n_qubits, amps)


def predict_proba(
    circuit: Circuit,
    theta: Optional[Sequence[float]] = None,
    x: Optional[Sequence[float]] = None,
    input_state: Optional[StateVector] = None,
) -> Tuple[float, float]:
    """
    Label probabilities (g0, g1) from projectors on the readout qubit.

    Label 0 is predicted iff <Z_m> >= 0, i.e. iff g0 >= 0.5.
    """
    out = evaluate(circuit, theta, x, input_state)
    n, m = circuit.n_qubits, circuit.readout_qubit
    g0 = projector_probability_raw(out.amplitudes, m, 0, n)
    return g0, 1.0 - g0


def readout_z(
    circuit: Circuit,
    theta: Optional[Sequence[float]] = None,
    x: Optional[Sequence[float]] = None,
    input_state: Optional[StateVector] = None,
) -> float:
    """<Z_m> on the readout qubit."""
    out = evaluate(circuit, theta, x, input_state)
    return z_expectation_raw(out.amplitudes, circuit.readout_qubit, circuit.n_qubits)


def predict_label(g: Tuple[float, float]) -> int:
    return 0 if g[0] >= 0.5 else 1


def compose_input_state(encoding: Circuit) -> StateVector:
    """Run a fixed (parameter-free) encoding circuit on |0...0>."""
    if encoding.n_params or encoding.n_features:
        raise StructuralException("input-state encodings must be parameter-free")
    return evaluate(encoding)
