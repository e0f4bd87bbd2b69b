"""
Randomized agreement check between analytic gradients and central differences.

Instances span 2-6 qubits and the three encodings (interleaved slots, feature
encoding, rotation encoding).
"""
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException
from qcl.services.autodiff.finite_difference import finite_diff_grad
from qcl.services.autodiff.parameter_shift import proba_jacobian
from qcl.services.simulation.circuit import (
    Circuit,
    bind_interleaved,
    build_classifier,
    build_feature_encoding,
    build_rotation_encoding,
    compose_input_state,
    predict_proba,
)
from qcl.services.simulation.statevector import StateVector
from qcl.utils.json_logger import performance_logger

logger = logging.getLogger(__name__)

ENCODINGS = ("interleaved", "feature", "rotation")


@dataclass
class GradcheckInstance:
    encoding: str
    n_qubits: int
    n_params: int
    max_deviation: float


@dataclass
class GradcheckReport:
    tolerance: float
    step: float
    method: str
    instances: List[GradcheckInstance] = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max((i.max_deviation for i in self.instances), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def summary(self) -> dict:
        return {
            "instances": len(self.instances),
            "method": self.method,
            "step": self.step,
            "tolerance": self.tolerance,
            "max_deviation": self.max_deviation,
            "passed": self.passed,
            "by_encoding": {
                enc: max(
                    (i.max_deviation for i in self.instances if i.encoding == enc), default=0.0
                )
                for enc in ENCODINGS
            },
        }


def random_instance(
    rng: np.random.Generator, encoding: str, n_qubits: int
) -> Tuple[Circuit, np.ndarray, Optional[np.ndarray], Optional[StateVector]]:
    """A random (circuit, theta, x, input_state) for one encoding."""
    n_blocks = int(rng.integers(1, 3))
    entangler = "CNOT" if rng.random() < 0.5 else "CZ"
    circuit = build_classifier(
        n_qubits, n_blocks, entangler=entangler, readout_qubit=int(rng.integers(n_qubits))
    )
    theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
    x = None
    input_state = None
    if encoding == "interleaved":
        n_encoded = int(rng.integers(1, circuit.n_params + 1))
        circuit = bind_interleaved(circuit, settings.INTERLEAVED_SCALE, n_encoded)
        x = rng.uniform(-1.0, 1.0, n_encoded)
    elif encoding == "feature":
        input_state = compose_input_state(build_feature_encoding(rng.uniform(-1.0, 1.0, n_qubits)))
    elif encoding == "rotation":
        input_state = compose_input_state(
            build_rotation_encoding(rng.uniform(-np.pi, np.pi, n_qubits))
        )
    else:
        raise ArgumentException(f"unknown encoding {encoding!r}")
    return circuit, theta, x, input_state


def gradient_check(
    n_instances: Optional[int] = None,
    qubit_range: Tuple[int, int] = (2, 6),
    step: Optional[float] = None,
    tolerance: Optional[float] = None,
    seed: int = 0,
    method: str = "parameter_shift",
    inject_sign_flip: bool = False,
) -> GradcheckReport:
    """
    Compare dg0/dtheta against central differences on random instances.

    ``inject_sign_flip`` negates the analytic gradient so callers can confirm
    the check actually fails on a wrong derivative.
    """
    n_instances = n_instances or settings.GRADCHECK_INSTANCES
    step = step or settings.GRADCHECK_STEP
    tolerance = tolerance or settings.GRADCHECK_TOLERANCE
    rng = np.random.default_rng(seed)
    report = GradcheckReport(tolerance=tolerance, step=step, method=method)
    started = time.time()

    for k in range(n_instances):
        encoding = ENCODINGS[k % len(ENCODINGS)]
        n_qubits = int(rng.integers(qubit_range[0], qubit_range[1] + 1))
        circuit, theta, x, input_state = random_instance(rng, encoding, n_qubits)

        analytic = proba_jacobian(circuit, theta, x, input_state, method=method)
        if inject_sign_flip:
            analytic = -analytic
        numeric = finite_diff_grad(
            lambda th: predict_proba(circuit, th, x, input_state)[0], theta, step
        )
        deviation = float(np.max(np.abs(analytic - numeric)))
        report.instances.append(
            GradcheckInstance(encoding, n_qubits, circuit.n_params, deviation)
        )
        if deviation > tolerance:
            logger.warning(
                f"Gradient mismatch on instance {k}: encoding={encoding}, qubits={n_qubits}, "
                f"deviation={deviation:.3e}"
            )

    performance_logger.log_operation(
        "gradient_check",
        (time.time() - started) * 1000,
        success=report.passed,
        metadata=report.summary(),
    )
    return report
