from typing import Callable, Sequence

import numpy as np

from qcl.core.exceptions import ArgumentException


def finite_diff_grad(
    f: Callable[[np.ndarray], float], theta: Sequence[float], step: float = 1e-4
) -> np.ndarray:
    """Central differences (f(theta + eps e_j) - f(theta - eps e_j)) / (2 eps)."""
    if step <= 0:
        raise ArgumentException(f"finite-difference step must be positive, got {step}")
    th = np.asarray(theta, dtype=float)
    grad = np.zeros(th.size)
    for j in range(th.size):
        plus = th.copy()
        plus[j] += step
        minus = th.copy()
        minus[j] -= step
        grad[j] = (f(plus) - f(minus)) / (2.0 * step)
    return grad
