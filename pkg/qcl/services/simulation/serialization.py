"""
Line-oriented circuit text format.

    # qcl-circuit v1 qubits=18 params=216 features=128 readout=9
    RX 0 2.0 0 0
    CNOT 0 1
    RZZ 3 4 0.0 - - +1.25

One gate per line: ``KIND q0 [q1] [c i j [+k]]`` where ``i`` (data index) and
``j`` (parameter index) are ``-`` when absent and ``+k`` is an optional
constant angle term.
"""
import logging
from pathlib import Path
from typing import List, Union

from qcl.core.exceptions import DataIOException, StructuralException
from qcl.services.simulation.circuit import Circuit
from qcl.services.simulation.gates import GateKind
from qcl.services.simulation.ir import AngleExpr, GateOp

logger = logging.getLogger(__name__)

HEADER = "# qcl-circuit v1"


def circuit_to_text(circuit: Circuit) -> str:
    lines = [
        f"{HEADER} qubits={circuit.n_qubits} params={circuit.n_params} "
        f"features={circuit.n_features} readout={circuit.readout_qubit}"
    ]
    for op in circuit.ops:
        tokens = [op.kind.value, *(str(q) for q in op.qubits)]
        if op.angle_slot is not None:
            tokens.extend(op.angle_slot.to_tokens())
        lines.append(" ".join(tokens))
    return "\n".join(lines) + "\n"


def _parse_slot(tokens: List[str], line_no: int) -> AngleExpr:
    if len(tokens) not in (3, 4):
        raise StructuralException(f"line {line_no}: expected 'c i j [+k]', got {tokens}")
    constant = 0.0
    if len(tokens) == 4:
        if not tokens[3].startswith("+"):
            raise StructuralException(f"line {line_no}: constant term must start with '+'")
        constant = float(tokens[3][1:])
    return AngleExpr(
        data_coeff=float(tokens[0]),
        data_index=None if tokens[1] == "-" else int(tokens[1]),
        param_index=None if tokens[2] == "-" else int(tokens[2]),
        constant=constant,
    )


def circuit_from_text(text: str) -> Circuit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(HEADER):
        raise StructuralException("missing circuit header")
    meta = dict(tok.split("=", 1) for tok in lines[0][len(HEADER):].split())
    ops: List[GateOp] = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split()
        try:
            kind = GateKind(parts[0])
        except ValueError:
            raise StructuralException(f"line {line_no}: unknown gate {parts[0]!r}")
        qubits = tuple(int(q) for q in parts[1:1 + kind.n_qubits])
        rest = parts[1 + kind.n_qubits:]
        slot = _parse_slot(rest, line_no) if kind.is_parametric else None
        if not kind.is_parametric and rest:
            raise StructuralException(f"line {line_no}: {kind.value} takes no angle")
        ops.append(GateOp(kind, qubits, slot))
    return Circuit(
        n_qubits=int(meta["qubits"]),
        ops=tuple(ops),
        n_params=int(meta.get("params", 0)),
        n_features=int(meta.get("features", 0)),
        readout_qubit=int(meta.get("readout", 0)),
    )


def save_circuit(circuit: Circuit, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(circuit_to_text(circuit))
    except OSError as e:
        raise DataIOException(f"cannot write circuit to {path}: {e}")
    logger.info(f"Saved circuit ({len(circuit.ops)} ops) to {path}")
    return path


def load_circuit(path: Union[str, Path]) -> Circuit:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DataIOException(f"cannot read circuit from {path}: {e}")
    return circuit_from_text(text)
