"""
Elastic weight consolidation.

    L_ewc = L_k + sum_{t<k} (lambda_{k,t} / 2) sum_j F_{t,j} (theta_j - theta*_{t,j})^2

Stages are numbered from 1; stage k consults anchors of stages 1..k-1.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from qcl.core.exceptions import ArgumentException, StructuralException

logger = logging.getLogger(__name__)


@dataclass
class StageAnchor:
    theta_star: np.ndarray
    fisher: np.ndarray


@dataclass
class EwcHistory:
    """Anchors and Fisher diagonals of finished stages plus lambda_{k,t} strengths."""
    n_params: int
    stages: List[StageAnchor] = field(default_factory=list)
    lambda_matrix: Dict[int, Dict[int, float]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.stages)

    def append(self, theta_star: Sequence[float], fisher: Sequence[float]) -> int:
        """Record a finished stage; returns its 1-based index."""
        th = np.array(theta_star, dtype=float)
        f = np.array(fisher, dtype=float)
        if th.shape != (self.n_params,) or f.shape != (self.n_params,):
            raise StructuralException(
                f"anchor and Fisher must have length {self.n_params}",
                details={"theta_star": th.shape, "fisher": f.shape},
            )
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ArgumentException("Fisher entries must be finite and non-negative")
        self.stages.append(StageAnchor(th, f))
        return len(self.stages)

    def set_lambdas(self, stage: int, lambdas: Mapping[int, float]) -> None:
        for t, lam in lambdas.items():
            if lam < 0:
                raise ArgumentException(f"lambda_{{{stage},{t}}} must be >= 0, got {lam}")
        self.lambda_matrix[stage] = {int(t): float(lam) for t, lam in lambdas.items()}

    def anchor(self, t: int) -> StageAnchor:
        if not 1 <= t <= len(self.stages):
            raise StructuralException(
                f"history has no stage {t} (recorded stages: {len(self.stages)})"
            )
        return self.stages[t - 1]

    def strength(self, stage: int, t: int) -> float:
        return self.lambda_matrix.get(stage, {}).get(t, 0.0)

    def _check_stage(self, stage: int) -> None:
        if stage < 1:
            raise StructuralException(f"stages are numbered from 1, got {stage}")
        if len(self.stages) < stage - 1:
            raise StructuralException(
                f"stage {stage} needs anchors for stages 1..{stage - 1}, "
                f"history holds {len(self.stages)}"
            )


def ewc_penalty(theta: Sequence[float], history: EwcHistory, stage: int) -> float:
    history._check_stage(stage)
    th = np.asarray(theta, dtype=float)
    total = 0.0
    for t in range(1, stage):
        lam = history.strength(stage, t)
        if lam == 0.0:
            continue
        a = history.anchor(t)
        total += 0.5 * lam * float(np.dot(a.fisher, (th - a.theta_star) ** 2))
    return total


def ewc_loss(base_loss: float, theta: Sequence[float], history: EwcHistory, stage: int) -> float:
    return float(base_loss) + ewc_penalty(theta, history, stage)


def ewc_grad(
    base_grad: np.ndarray, theta: Sequence[float], history: EwcHistory, stage: int
) -> np.ndarray:
    """base_grad + sum_t lambda_{k,t} F_t * (theta - theta*_t)."""
    history._check_stage(stage)
    th = np.asarray(theta, dtype=float)
    grad = np.array(base_grad, dtype=float)
    for t in range(1, stage):
        lam = history.strength(stage, t)
        if lam == 0.0:
            continue
        a = history.anchor(t)
        grad += lam * a.fisher * (th - a.theta_star)
    return grad


def previous_fisher(history: EwcHistory, stage: int) -> Optional[np.ndarray]:
    """Fisher of the stage just before ``stage``, if recorded."""
    if stage < 2 or len(history.stages) < stage - 1:
        return None
    return history.anchor(stage - 1).fisher
