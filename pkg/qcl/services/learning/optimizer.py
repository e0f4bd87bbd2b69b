"""
Nadam and Adam steps on a flat parameter vector.

Both are pure: they return a fresh OptimizerState and new parameters.
"""
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException, StructuralException


@dataclass(frozen=True)
class OptimizerState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros(
        cls,
        n_params: int,
        beta1: Optional[float] = None,
        beta2: Optional[float] = None,
        epsilon: Optional[float] = None,
    ) -> "OptimizerState":
        return cls(
            first_moment=np.zeros(n_params),
            second_moment=np.zeros(n_params),
            step_count=0,
            beta1=settings.NADAM_BETA1 if beta1 is None else beta1,
            beta2=settings.NADAM_BETA2 if beta2 is None else beta2,
            epsilon=settings.NADAM_EPSILON if epsilon is None else epsilon,
        )


def _moments(
    opt: OptimizerState, theta: np.ndarray, grad: np.ndarray
) -> Tuple[OptimizerState, np.ndarray, np.ndarray]:
    th = np.asarray(theta, dtype=float)
    g = np.asarray(grad, dtype=float)
    if th.shape != opt.first_moment.shape or g.shape != th.shape:
        raise StructuralException(
            "optimizer shapes disagree",
            details={"theta": th.shape, "grad": g.shape, "moments": opt.first_moment.shape},
        )
    m = opt.beta1 * opt.first_moment + (1.0 - opt.beta1) * g
    v = opt.beta2 * opt.second_moment + (1.0 - opt.beta2) * g * g
    return replace(opt, first_moment=m, second_moment=v, step_count=opt.step_count + 1), th, g


def nadam_step(
    opt: OptimizerState, theta: np.ndarray, grad: np.ndarray, lr: float
) -> Tuple[OptimizerState, np.ndarray]:
    """Nesterov-accelerated adaptive moment step."""
    new, th, g = _moments(opt, theta, grad)
    t = new.step_count
    b1, b2 = new.beta1, new.beta2
    m_hat = new.first_moment / (1.0 - b1 ** t) if b1 > 0 else new.first_moment
    v_hat = new.second_moment / (1.0 - b2 ** t) if b2 > 0 else new.second_moment
    m_nesterov = b1 * m_hat + (1.0 - b1) * g / (1.0 - b1 ** t if b1 > 0 else 1.0)
    return new, th - lr * m_nesterov / (np.sqrt(v_hat) + new.epsilon)


def adam_step(
    opt: OptimizerState, theta: np.ndarray, grad: np.ndarray, lr: float
) -> Tuple[OptimizerState, np.ndarray]:
    new, th, _ = _moments(opt, theta, grad)
    t = new.step_count
    m_hat = new.first_moment / (1.0 - new.beta1 ** t) if new.beta1 > 0 else new.first_moment
    v_hat = new.second_moment / (1.0 - new.beta2 ** t) if new.beta2 > 0 else new.second_moment
    return new, th - lr * m_hat / (np.sqrt(v_hat) + new.epsilon)


StepFn = Callable[[OptimizerState, np.ndarray, np.ndarray, float], Tuple[OptimizerState, np.ndarray]]

OPTIMIZERS: Dict[str, StepFn] = {
    "nadam": nadam_step,
    "adam": adam_step,
}


def get_step_fn(name: str) -> StepFn:
    try:
        return OPTIMIZERS[name.lower()]
    except KeyError:
        raise ArgumentException(f"unknown optimizer {name!r}", details={"allowed": list(OPTIMIZERS)})
