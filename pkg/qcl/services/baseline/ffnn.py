"""
Sigmoid feedforward network n_in -> n_hidden -> 1 trained by backpropagation.

Flat parameter layout: W1 (n_hidden x n_in, row-major), b1, W2 (1 x n_hidden), b2.
The output y is read as g0 = y, g1 = 1 - y so the cross-entropy and EWC
machinery of the quantum classifier applies unchanged.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from qcl.core.exceptions import ArgumentException
from qcl.services.autodiff.fisher import empirical_fisher
from qcl.services.datasets.types import Sample, TaskKind
from qcl.services.learning.losses import clamp_probabilities, cross_entropy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FfnnLayout:
    n_in: int = 10
    n_hidden: int = 20
    n_out: int = 1

    def __post_init__(self):
        if self.n_out != 1:
            raise ArgumentException("only a single sigmoid output is supported")
        if self.n_in < 1 or self.n_hidden < 1:
            raise ArgumentException(f"invalid layer sizes {self.n_in}-{self.n_hidden}-{self.n_out}")

    @property
    def n_params(self) -> int:
        return self.n_hidden * self.n_in + self.n_hidden + self.n_out * self.n_hidden + self.n_out

    def unpack(self, params: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        p = np.asarray(params, dtype=float)
        if p.shape != (self.n_params,):
            raise ArgumentException(f"expected {self.n_params} parameters, got {p.size}")
        h, d = self.n_hidden, self.n_in
        w1 = p[: h * d].reshape(h, d)
        b1 = p[h * d: h * d + h]
        w2 = p[h * d + h: h * d + 2 * h]
        return w1, b1, w2, float(p[-1])

    def pack(self, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: float) -> np.ndarray:
        return np.concatenate([np.ravel(w1), np.ravel(b1), np.ravel(w2), [b2]])


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _check_x(layout: FfnnLayout, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (layout.n_in,):
        raise ArgumentException(f"expected {layout.n_in} features, got shape {x.shape}")
    return x


def ffnn_forward(params: np.ndarray, x: Sequence[float], layout: FfnnLayout = FfnnLayout()) -> float:
    """Network output in (0, 1); label 0 when it exceeds 0.5."""
    w1, b1, w2, b2 = layout.unpack(params)
    a1 = sigmoid(w1 @ _check_x(layout, x) + b1)
    return float(sigmoid(w2 @ a1 + b2))


def ffnn_grad(params: np.ndarray, sample: Sample, layout: FfnnLayout = FfnnLayout()) -> np.ndarray:
    """Cross-entropy gradient by backpropagation."""
    w1, b1, w2, b2 = layout.unpack(params)
    x = _check_x(layout, sample.features)
    a1 = sigmoid(w1 @ x + b1)
    y = float(sigmoid(w2 @ a1 + b2))

    g0, g1 = clamp_probabilities((y, 1.0 - y))
    a0, a1_label = sample.label
    dy = -a0 / g0 + a1_label / g1
    dz2 = dy * y * (1.0 - y)
    dw2 = dz2 * a1
    dz1 = dz2 * w2 * a1 * (1.0 - a1)
    dw1 = np.outer(dz1, x)
    return layout.pack(dw1, dz1, dw2, dz2)


def ffnn_fisher(
    params_star: np.ndarray,
    dataset: Sequence[Sample],
    layout: FfnnLayout = FfnnLayout(),
    threads: Optional[int] = None,
) -> np.ndarray:
    """Mean squared log-likelihood gradient of the true label (equal to the loss gradient)."""
    return empirical_fisher(lambda s: ffnn_grad(params_star, s, layout), dataset, threads)


class FeedforwardClassifier:
    """Classical backend for the continual-learning trainer; the task kind is ignored."""

    def __init__(self, layout: Optional[FfnnLayout] = None):
        self.layout = layout or FfnnLayout()
        self.n_params = self.layout.n_params
        logger.info(
            f"Feedforward classifier: {self.layout.n_in}-{self.layout.n_hidden}-1, "
            f"params={self.n_params}"
        )

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        lay = self.layout
        w1 = rng.uniform(-1.0, 1.0, (lay.n_hidden, lay.n_in)) / np.sqrt(lay.n_in)
        b1 = rng.uniform(-1.0, 1.0, lay.n_hidden) / np.sqrt(lay.n_in)
        w2 = rng.uniform(-1.0, 1.0, lay.n_hidden) / np.sqrt(lay.n_hidden)
        b2 = rng.uniform(-1.0, 1.0) / np.sqrt(lay.n_hidden)
        return lay.pack(w1, b1, w2, b2)

    def predict_proba(self, theta: np.ndarray, sample: Sample, kind: TaskKind = None) -> Tuple[float, float]:
        y = ffnn_forward(theta, sample.features, self.layout)
        return y, 1.0 - y

    def predict_label(self, g: Tuple[float, float]) -> int:
        # strict: an output of exactly 1/2 is class 1
        return 0 if g[0] > 0.5 else 1

    def loss(self, theta: np.ndarray, sample: Sample, kind: TaskKind = None) -> float:
        return cross_entropy(self.predict_proba(theta, sample), sample.label)

    def loss_grad_sample(self, theta: np.ndarray, sample: Sample, kind: TaskKind = None) -> np.ndarray:
        return ffnn_grad(theta, sample, self.layout)

    def fisher(
        self,
        theta: np.ndarray,
        samples: Sequence[Sample],
        kind: TaskKind = None,
        threads: Optional[int] = None,
    ) -> np.ndarray:
        return ffnn_fisher(theta, samples, self.layout, threads)
