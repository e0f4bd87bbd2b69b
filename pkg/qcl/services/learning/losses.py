"""Cross-entropy on (g0, g1) label probabilities."""
from typing import Optional, Sequence, Tuple

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException


def clamp_probabilities(g: Sequence[float], eps: Optional[float] = None) -> Tuple[float, float]:
    eps = settings.PROBABILITY_CLAMP if eps is None else eps
    return (
        float(np.clip(g[0], eps, 1.0 - eps)),
        float(np.clip(g[1], eps, 1.0 - eps)),
    )


def cross_entropy(g: Sequence[float], a: Sequence[float]) -> float:
    """-(a0 log g0 + a1 log g1) with g clamped to [eps, 1 - eps]."""
    g0, g1 = clamp_probabilities(g)
    return float(-(a[0] * np.log(g0) + a[1] * np.log(g1)))


def cross_entropy_grad(
    g: Sequence[float], a: Sequence[float], dg0: np.ndarray
) -> np.ndarray:
    """Chain rule dL/dtheta = -(a0/g0) dg0 - (a1/g1) dg1 with dg1 = -dg0."""
    g0, g1 = clamp_probabilities(g)
    return -(a[0] / g0) * dg0 + (a[1] / g1) * dg0


def one_hot(label: int) -> Tuple[int, int]:
    if label not in (0, 1):
        raise ArgumentException(f"binary label expected, got {label}")
    return (1, 0) if label == 0 else (0, 1)
