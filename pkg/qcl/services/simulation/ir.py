"""Gate-level intermediate representation shared by the simulator and the circuit builders."""
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from qcl.core.exceptions import StructuralException
from qcl.services.simulation.gates import GateKind


@dataclass(frozen=True)
class AngleExpr:
    """
    Rotation angle ``constant + data_coeff * x[data_index] + theta[param_index]``.

    Either indexed term may be absent. Circuits built from concrete data (the
    fixed encodings) carry only ``constant``.
    """
    data_coeff: float = 0.0
    data_index: Optional[int] = None
    param_index: Optional[int] = None
    constant: float = 0.0

    def resolve(
        self,
        theta: Optional[np.ndarray] = None,
        x: Optional[np.ndarray] = None,
    ) -> float:
        angle = self.constant
        if self.data_index is not None and x is not None and len(x) > 0:
            angle += self.data_coeff * float(x[self.data_index])
        if self.param_index is not None:
            if theta is None:
                raise StructuralException(
                    f"parameter {self.param_index} referenced but no theta supplied",
                    details={"param_index": self.param_index},
                )
            angle += float(theta[self.param_index])
        return angle

    def with_data(self, coeff: float, index: int) -> "AngleExpr":
        return replace(self, data_coeff=coeff, data_index=index)

    def to_tokens(self) -> Tuple[str, ...]:
        tokens = (
            repr(float(self.data_coeff)),
            "-" if self.data_index is None else str(self.data_index),
            "-" if self.param_index is None else str(self.param_index),
        )
        if self.constant != 0.0:
            tokens += (f"+{float(self.constant)!r}",)
        return tokens


@dataclass(frozen=True)
class GateOp:
    """One gate of a circuit: kind, 1-2 qubit indices, optional angle slot."""
    kind: GateKind
    qubits: Tuple[int, ...]
    angle_slot: Optional[AngleExpr] = None

    def __post_init__(self):
        if len(self.qubits) != self.kind.n_qubits:
            raise StructuralException(
                f"{self.kind.value} acts on {self.kind.n_qubits} qubit(s), got {len(self.qubits)}",
                details={"qubits": list(self.qubits)},
            )
        if self.kind.n_qubits == 2 and self.qubits[0] == self.qubits[1]:
            raise StructuralException(
                f"{self.kind.value} needs two distinct qubits", details={"qubits": list(self.qubits)}
            )
        if self.kind.is_parametric and self.angle_slot is None:
            raise StructuralException(f"{self.kind.value} requires an angle slot")
        if not self.kind.is_parametric and self.angle_slot is not None:
            raise StructuralException(f"{self.kind.value} takes no angle")

    @property
    def param_index(self) -> Optional[int]:
        return self.angle_slot.param_index if self.angle_slot is not None else None

    def angle(self, theta: Optional[np.ndarray] = None, x: Optional[np.ndarray] = None) -> float:
        return self.angle_slot.resolve(theta, x) if self.angle_slot is not None else 0.0

    @classmethod
    def fixed(cls, kind: GateKind, qubits: Sequence[int], angle: float = 0.0) -> "GateOp":
        """Gate with a constant angle (or no angle for H/CNOT/CZ)."""
        slot = AngleExpr(constant=float(angle)) if kind.is_parametric else None
        return cls(kind, tuple(int(q) for q in qubits), slot)

    @classmethod
    def trainable(cls, kind: GateKind, qubits: Sequence[int], param_index: int) -> "GateOp":
        return cls(kind, tuple(int(q) for q in qubits), AngleExpr(param_index=param_index))
