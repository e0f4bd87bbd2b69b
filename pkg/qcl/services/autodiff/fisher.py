"""
Per-sample loss gradients and the diagonal Fisher information.

    F_j = (1/N) sum_i (dL(h(x_i; theta), a_i) / dtheta_j)^2   at theta = theta*
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, TypeVar

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException
from qcl.services.autodiff.parameter_shift import proba_jacobian
from qcl.services.learning.losses import clamp_probabilities, cross_entropy, cross_entropy_grad
from qcl.services.simulation.circuit import Circuit, predict_proba
from qcl.services.simulation.statevector import StateVector
from qcl.utils.parallel import ordered_map, sequential_sum

logger = logging.getLogger(__name__)

S = TypeVar("S")

FISHER_MODES = ("loss_gradient", "log_likelihood")


@dataclass(frozen=True)
class EncodedSample:
    """Circuit-ready sample: data vector and/or prepared input state plus one-hot label."""
    label: Tuple[int, int]
    x: Optional[np.ndarray] = None
    input_state: Optional[StateVector] = None


def sample_loss(circuit: Circuit, theta: Sequence[float], sample: EncodedSample) -> float:
    g = predict_proba(circuit, theta, sample.x, sample.input_state)
    return cross_entropy(g, sample.label)


def loss_grad_sample(
    circuit: Circuit,
    theta: Sequence[float],
    sample: EncodedSample,
    method: Optional[str] = None,
) -> np.ndarray:
    """Cross-entropy gradient for one sample via the chain rule."""
    g = predict_proba(circuit, theta, sample.x, sample.input_state)
    dg0 = proba_jacobian(circuit, theta, sample.x, sample.input_state, method=method)
    return cross_entropy_grad(g, sample.label, dg0)


def log_likelihood_grad_sample(
    circuit: Circuit,
    theta: Sequence[float],
    sample: EncodedSample,
    method: Optional[str] = None,
) -> np.ndarray:
    """d log p(y = y_x | theta) / dtheta for the sample's true label."""
    g0, g1 = clamp_probabilities(predict_proba(circuit, theta, sample.x, sample.input_state))
    dg0 = proba_jacobian(circuit, theta, sample.x, sample.input_state, method=method)
    return dg0 / g0 if sample.label[0] == 1 else -dg0 / g1


def empirical_fisher(
    grad_fn: Callable[[S], np.ndarray],
    samples: Sequence[S],
    threads: Optional[int] = None,
) -> np.ndarray:
    """Mean of squared per-sample gradients, reduced in dataset order."""
    if len(samples) == 0:
        raise ArgumentException("Fisher information needs a nonempty dataset")
    grads = ordered_map(grad_fn, samples, threads)
    return sequential_sum(g ** 2 for g in grads) / len(samples)


def fisher_diagonal(
    circuit: Circuit,
    theta_star: Sequence[float],
    dataset: Sequence[EncodedSample],
    method: Optional[str] = None,
    mode: Optional[str] = None,
    threads: Optional[int] = None,
) -> np.ndarray:
    """
    Diagonal Fisher of a circuit classifier at ``theta_star``.

    Args:
        mode: "loss_gradient" (default) or "log_likelihood"; they agree for
            one-hot labels
    """
    mode = (mode or settings.FISHER_MODE).lower()
    if mode not in FISHER_MODES:
        raise ArgumentException(f"unknown Fisher mode {mode!r}", details={"allowed": list(FISHER_MODES)})
    grad = loss_grad_sample if mode == "loss_gradient" else log_likelihood_grad_sample
    theta_star = np.asarray(theta_star, dtype=float)
    fisher = empirical_fisher(lambda s: grad(circuit, theta_star, s, method), dataset, threads)
    logger.debug(f"Fisher diagonal over {len(dataset)} samples, max={float(fisher.max()):.4g}")
    return fisher
