"""
Classifier backends driven by the continual-learning trainer.

Any object with ``n_params``, ``init_params``, ``predict_proba``, ``loss``,
``loss_grad_sample`` and ``fisher`` can be trained; the quantum circuit
classifier here and the feedforward network in ``qcl.services.baseline`` both
qualify.
"""
import logging
import threading
from collections import OrderedDict
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import StructuralException
from qcl.services.autodiff.fisher import EncodedSample, fisher_diagonal, loss_grad_sample, sample_loss
from qcl.services.datasets.cluster_ising import materialize_state
from qcl.services.datasets.types import Sample, TaskKind
from qcl.services.simulation.circuit import (
    Circuit,
    bind_interleaved,
    build_classifier,
    build_feature_encoding,
    build_rotation_encoding,
    compose_input_state,
    predict_label,
    predict_proba,
)
from qcl.services.simulation.statevector import StateVector

logger = logging.getLogger(__name__)


class ClassifierModel(Protocol):
    n_params: int

    def init_params(self, rng: np.random.Generator) -> np.ndarray: ...

    def predict_proba(
        self, theta: np.ndarray, sample: Sample, kind: TaskKind
    ) -> Tuple[float, float]: ...

    def predict_label(self, g: Tuple[float, float]) -> int: ...

    def loss(self, theta: np.ndarray, sample: Sample, kind: TaskKind) -> float: ...

    def loss_grad_sample(self, theta: np.ndarray, sample: Sample, kind: TaskKind) -> np.ndarray: ...

    def fisher(
        self,
        theta: np.ndarray,
        samples: Sequence[Sample],
        kind: TaskKind,
        threads: Optional[int] = None,
    ) -> np.ndarray: ...


class QuantumClassifier:
    """
    Variational circuit classifier.

    The circuit carries interleaved data slots when ``n_encoded`` > 0. Samples
    are encoded by their task kind: IMAGE_128 features fill the data slots;
    ENGINEERED_Q and PCA_10 features become feature- or rotation-encoded input
    states; QUANTUM_PHASE recipes become prepared ground states.
    """

    def __init__(
        self,
        n_qubits: int,
        n_blocks: int,
        entangler: str = "CNOT",
        readout_qubit: int = 0,
        n_encoded: int = 0,
        data_scale: Optional[float] = None,
        rotation_order: Optional[Sequence[str]] = None,
        feature_t: Optional[float] = None,
        init_range: Tuple[float, float] = (-np.pi, np.pi),
        gradient_method: Optional[str] = None,
        cache_size: Optional[int] = None,
    ):
        circuit = build_classifier(n_qubits, n_blocks, entangler, readout_qubit, rotation_order)
        if n_encoded:
            scale = settings.INTERLEAVED_SCALE if data_scale is None else data_scale
            circuit = bind_interleaved(circuit, scale, n_encoded)
        self.circuit: Circuit = circuit
        self.n_params = circuit.n_params
        self.feature_t = feature_t
        self.init_range = init_range
        self.gradient_method = gradient_method or settings.GRADIENT_METHOD
        self._cache_size = cache_size or settings.STATE_CACHE_SIZE
        self._states: "OrderedDict[tuple, StateVector]" = OrderedDict()
        self._lock = threading.Lock()
        logger.info(
            f"Quantum classifier: qubits={n_qubits}, blocks={n_blocks}, entangler={entangler}, "
            f"readout={readout_qubit}, params={self.n_params}, data_slots={circuit.n_features}"
        )

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.init_range
        return rng.uniform(lo, hi, self.n_params)

    # -- encoding -----------------------------------------------------------

    def _input_state(self, sample: Sample, kind: TaskKind) -> StateVector:
        if kind == TaskKind.QUANTUM_PHASE:
            recipe = sample.state_recipe
            if recipe is None:
                raise StructuralException("quantum-phase sample has no state recipe")
            if recipe.n_qubits != self.n_qubits:
                raise StructuralException(
                    f"recipe prepares {recipe.n_qubits} qubits, classifier has {self.n_qubits}"
                )
            key: tuple = ("phase",) + recipe.cache_key()
        else:
            x = self._padded(sample, self.n_qubits)
            key = (kind.value, x.tobytes())

        with self._lock:
            state = self._states.get(key)
        if state is not None:
            return state

        if kind == TaskKind.QUANTUM_PHASE:
            state = materialize_state(sample.state_recipe)
        elif kind == TaskKind.ENGINEERED_Q:
            state = compose_input_state(build_feature_encoding(x, self.feature_t))
        else:
            state = compose_input_state(build_rotation_encoding(x))

        with self._lock:
            self._states[key] = state
            while len(self._states) > self._cache_size:
                self._states.popitem(last=False)
        return state

    @staticmethod
    def _padded(sample: Sample, width: int) -> np.ndarray:
        if sample.features is None:
            raise StructuralException("sample has no feature vector")
        x = np.asarray(sample.features, dtype=float)
        if x.size > width:
            raise StructuralException(
                f"{x.size} features do not fit {width} slots", details={"features": x.size}
            )
        if x.size < width:
            x = np.concatenate([x, np.zeros(width - x.size)])
        return x

    def encode(self, sample: Sample, kind: TaskKind) -> EncodedSample:
        """Circuit-ready view of ``sample`` for a task of ``kind``."""
        n_features = self.circuit.n_features
        if kind == TaskKind.IMAGE_128:
            if n_features == 0:
                raise StructuralException("image tasks need a classifier with data slots")
            return EncodedSample(label=sample.label, x=self._padded(sample, n_features))
        return EncodedSample(
            label=sample.label,
            x=np.zeros(n_features),
            input_state=self._input_state(sample, kind),
        )

    # -- model protocol -----------------------------------------------------

    def predict_proba(self, theta: np.ndarray, sample: Sample, kind: TaskKind) -> Tuple[float, float]:
        enc = self.encode(sample, kind)
        return predict_proba(self.circuit, theta, enc.x, enc.input_state)

    def predict_label(self, g: Tuple[float, float]) -> int:
        return predict_label(g)

    def loss(self, theta: np.ndarray, sample: Sample, kind: TaskKind) -> float:
        return sample_loss(self.circuit, theta, self.encode(sample, kind))

    def loss_grad_sample(self, theta: np.ndarray, sample: Sample, kind: TaskKind) -> np.ndarray:
        return loss_grad_sample(
            self.circuit, theta, self.encode(sample, kind), method=self.gradient_method
        )

    def fisher(
        self,
        theta: np.ndarray,
        samples: Sequence[Sample],
        kind: TaskKind,
        threads: Optional[int] = None,
    ) -> np.ndarray:
        encoded = [self.encode(s, kind) for s in samples]
        return fisher_diagonal(
            self.circuit, theta, encoded, method=self.gradient_method, threads=threads
        )
