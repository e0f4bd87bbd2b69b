"""Two-Gaussian stand-in for the licensed medical corpus."""
import logging

import numpy as np

from qcl.core.exceptions import ArgumentException
from qcl.services.datasets.types import Sample, TaskDataset, TaskKind

logger = logging.getLogger(__name__)


def synthetic_two_class(
    dim: int,
    count: int,
    separation: float,
    seed: int = 0,
    n_test: int = 0,
    name: str = "synthetic",
) -> TaskDataset:
    """
    Two unit-variance Gaussian blobs whose means sit ``separation`` apart along a
    random unit direction, standardized per coordinate over all samples.

    ``count`` samples go to train (balanced) and ``n_test`` more to test.
    """
    if separation < 0:
        raise ArgumentException(f"separation must be >= 0, got {separation}")
    if dim < 1 or count < 2:
        raise ArgumentException(f"need dim >= 1 and count >= 2, got dim={dim}, count={count}")
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)

    total = count + n_test
    labels = np.arange(total) % 2
    X = rng.normal(size=(total, dim)) + np.outer(np.where(labels == 0, -0.5, 0.5) * separation, direction)
    X = (X - X.mean(axis=0)) / X.std(axis=0)

    order = rng.permutation(total)
    samples = [Sample.from_class(X[i], int(labels[i])) for i in order]
    task = TaskDataset(
        train=samples[:count],
        test=samples[count:],
        task_kind=TaskKind.PCA_10,
        name=name,
        metadata={"dim": dim, "separation": separation, "seed": seed},
    )
    logger.debug(f"Synthetic task {name}: dim={dim}, counts={task.class_counts()}")
    return task
