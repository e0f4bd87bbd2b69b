import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from qcl.core.config import settings
from qcl.core.exceptions import ArgumentException, DatasetGenerationException
from qcl.services.datasets.types import Sample, TaskDataset, TaskKind, split_train_test
from qcl.services.simulation.circuit import (
    Circuit,
    build_classifier,
    build_feature_encoding,
    compose_input_state,
    readout_z,
)

logger = logging.getLogger(__name__)

LABEL_BLOCKS = 3
LABEL_READOUT = 1


def label_circuit(n_qubits: int) -> Circuit:
    """The random classifier that assigns engineered labels (3 blocks, CZ, readout qubit 1)."""
    return build_classifier(n_qubits, LABEL_BLOCKS, entangler="CZ", readout_qubit=LABEL_READOUT)


def engineer_labels(
    xs: Sequence[Sequence[float]],
    theta_rand: Sequence[float],
    t: Optional[float] = None,
    thresholds: Optional[Tuple[float, float]] = None,
) -> TaskDataset:
    """
    Label feature vectors by <Z_1> of a random classifier on the feature-encoded state.

    Label 0 when <Z_1> > hi, label 1 when <Z_1> < lo; samples in the dead band
    are discarded. All kept samples land in ``train``; the caller splits.

    Raises:
        DatasetGenerationException: when every sample is discarded or one label is missing
    """
    band = settings.ENGINEERED_THRESHOLD
    lo, hi = thresholds if thresholds is not None else (-band, band)
    if not lo < 0 < hi:
        raise ArgumentException(f"thresholds must satisfy lo < 0 < hi, got ({lo}, {hi})")
    X = np.asarray(xs, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ArgumentException(f"expected a nonempty 2-D feature matrix, got shape {X.shape}")

    circuit = label_circuit(X.shape[1])
    theta = np.asarray(theta_rand, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ArgumentException(
            f"theta_rand must have {circuit.n_params} entries, got {theta.size}"
        )

    kept, z_values = [], []
    for x in X:
        state = compose_input_state(build_feature_encoding(x, t))
        z = readout_z(circuit, theta, input_state=state)
        z_values.append(z)
        if z > hi:
            kept.append(Sample.from_class(x, 0))
        elif z < lo:
            kept.append(Sample.from_class(x, 1))

    counts = [sum(s.label_index == c for s in kept) for c in (0, 1)]
    details = {"total": len(X), "kept": len(kept), "label_counts": counts}
    if not kept or min(counts) == 0:
        raise DatasetGenerationException("engineered labels lack a class", details=details)
    logger.debug(f"Engineered labels: kept {len(kept)}/{len(X)}, counts={counts}")
    return TaskDataset(
        train=kept,
        test=[],
        task_kind=TaskKind.ENGINEERED_Q,
        name="engineered",
        metadata={**details, "z_values": z_values},
    )


def generate_engineered_task(
    xs: Sequence[Sequence[float]],
    t: Optional[float] = None,
    thresholds: Optional[Tuple[float, float]] = None,
    seed: int = 0,
    test_fraction: Optional[float] = None,
    max_redraws: Optional[int] = None,
) -> TaskDataset:
    """
    Draw theta_rand uniformly from [0, 2pi), label, and split train/test.

    A draw that leaves a class empty is redrawn up to ``max_redraws`` times.
    """
    test_fraction = test_fraction or settings.ENGINEERED_TEST_FRACTION
    attempts = max_redraws or settings.ENGINEERED_MAX_REDRAWS
    rng = np.random.default_rng(seed)
    n_params = label_circuit(np.asarray(xs).shape[1]).n_params
    draws = []

    def attempt() -> TaskDataset:
        theta_rand = rng.uniform(0.0, 2.0 * np.pi, n_params)
        draws.append(theta_rand)
        return engineer_labels(xs, theta_rand, t, thresholds)

    try:
        for retry_state in Retrying(
            stop=stop_after_attempt(attempts),
            retry=retry_if_exception_type(DatasetGenerationException),
        ):
            with retry_state:
                labelled = attempt()
    except RetryError as e:
        raise DatasetGenerationException(
            f"no usable labelling after {attempts} draws",
            details={"attempts": attempts},
        ) from e
    if len(draws) > 1:
        logger.warning(f"Engineered labels needed {len(draws)} draws of theta_rand")

    kept = labelled.train
    n_test = max(2, int(round(len(kept) * test_fraction)))
    train, test = split_train_test(kept, n_test, rng)
    task = TaskDataset(
        train=train,
        test=test,
        task_kind=TaskKind.ENGINEERED_Q,
        name="engineered",
        metadata={
            "total": labelled.metadata["total"],
            "kept": len(kept),
            "discard_rate": 1.0 - len(kept) / labelled.metadata["total"],
            "draws": len(draws),
            "theta_rand": draws[-1].tolist(),
            "seed": seed,
        },
    )
    logger.info(
        f"Engineered task: kept {len(kept)}/{labelled.metadata['total']}, "
        f"split {len(train)}/{len(test)}"
    )
    return task.validate()
