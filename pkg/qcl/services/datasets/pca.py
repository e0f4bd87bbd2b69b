"""Principal component compression with per-coordinate standardization."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException
from qcl.services.datasets.types import Sample, TaskDataset, TaskKind, split_train_test

logger = logging.getLogger(__name__)


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x d, rows orthonormal
    feature_means: np.ndarray
    feature_stds: np.ndarray
    explained_variance: np.ndarray
    skipped: List[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.components.shape[0]


def pca_fit(samples: Sequence[Sequence[float]], k: Optional[int] = None, tol: float = 1e-12) -> PcaModel:
    """
    Top-``k`` covariance eigenvectors, then standardization statistics of the
    projected training corpus.

    Directions with (numerically) zero variance are skipped with a warning, so
    the model may hold fewer than ``k`` components.
    """
    k = k or settings.PCA_COMPONENTS
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise ArgumentException(f"expected a 2-D sample matrix, got shape {X.shape}")
    n, d = X.shape
    if k > d:
        raise ArgumentException(f"cannot keep {k} components of {d}-dimensional data")
    if n < k + 1:
        raise ArgumentException(f"need at least {k + 1} samples for {k} components, got {n}")

    mean = X.mean(axis=0)
    cov = np.cov(X - mean, rowvar=False).reshape(d, d)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    cutoff = tol * max(float(evals.max()), 1.0)

    keep, skipped = [], []
    for rank, i in enumerate(order):
        if evals[i] > cutoff:
            keep.append(i)
        else:
            skipped.append(rank)
    if skipped:
        logger.warning(f"PCA skipped {len(skipped)} degenerate component(s) at ranks {skipped}")

    components = evecs[:, keep].T
    projected = (X - mean) @ components.T
    stds = projected.std(axis=0)
    return PcaModel(
        mean=mean,
        components=components,
        feature_means=projected.mean(axis=0),
        feature_stds=stds,
        explained_variance=evals[keep],
        skipped=skipped,
    )


def pca_project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Coordinates along the components, before standardization."""
    return (np.asarray(x, dtype=float) - model.mean) @ model.components.T


def pca_apply(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Projected and standardized features; accepts one vector or a batch."""
    return (pca_project(model, x) - model.feature_means) / model.feature_stds


def build_pca_task(
    vectors: np.ndarray,
    labels: Sequence[int],
    n_test: int,
    k: Optional[int] = None,
    seed: int = 0,
    name: str = "pca",
) -> TaskDataset:
    """
    Two-class task of standardized PCA features; the PCA is fit on the training
    split and applied to both.
    """
    X = np.asarray(vectors, dtype=float).reshape(len(labels), -1)
    rng = np.random.default_rng(seed)
    raw = [Sample.from_class(x, y) for x, y in zip(X, labels)]
    train, test = split_train_test(raw, n_test, rng)
    model = pca_fit(np.array([s.features for s in train]), k)

    def project(split: List[Sample]) -> List[Sample]:
        feats = pca_apply(model, np.array([s.features for s in split]))
        return [Sample(label=s.label, features=f) for s, f in zip(split, feats)]

    task = TaskDataset(
        train=project(train),
        test=project(test),
        task_kind=TaskKind.PCA_10,
        name=name,
        metadata={"k": model.k, "skipped_components": model.skipped, "seed": seed},
    )
    return task.validate()
