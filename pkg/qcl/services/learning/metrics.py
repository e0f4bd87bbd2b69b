"""Test-set metrics, parameter-change statistics and the metrics CSV."""
import csv
import io
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from qcl.core.exceptions import ArgumentException, DataIOException
from qcl.schemas.training import MetricsRecord
from qcl.services.datasets.types import Sample, TaskKind
from qcl.services.learning.losses import cross_entropy
from qcl.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

METRICS_HEADER = ["stage", "epoch", "task_id", "accuracy", "loss", "dtheta_largeF", "dtheta_smallF"]


def _probabilities(
    model, theta: np.ndarray, testset: Sequence[Sample], kind: TaskKind, threads: Optional[int]
):
    if len(testset) == 0:
        raise ArgumentException("cannot evaluate on an empty test set")
    return ordered_map(lambda s: model.predict_proba(theta, s, kind), testset, threads)


def evaluate_accuracy(
    model,
    theta: np.ndarray,
    testset: Sequence[Sample],
    kind: TaskKind,
    threads: Optional[int] = None,
) -> float:
    """Fraction of samples whose label under ``model.predict_label`` matches the truth."""
    probs = _probabilities(model, theta, testset, kind, threads)
    hits = sum(int(model.predict_label(g) == s.label_index) for g, s in zip(probs, testset))
    return hits / len(testset)


def evaluate_task(
    model,
    theta: np.ndarray,
    testset: Sequence[Sample],
    kind: TaskKind,
    threads: Optional[int] = None,
) -> Tuple[float, float]:
    """(accuracy, mean cross-entropy) in one pass over ``testset``."""
    probs = _probabilities(model, theta, testset, kind, threads)
    hits = 0
    loss = 0.0
    for g, s in zip(probs, testset):
        hits += int(model.predict_label(g) == s.label_index)
        loss += cross_entropy(g, s.label)
    return hits / len(testset), loss / len(testset)


def parameter_change_stats(
    theta_trajectory: Iterable[Sequence[float]],
    theta_anchor: Sequence[float],
    fisher: Sequence[float],
    threshold: float,
) -> List[Tuple[Optional[float], Optional[float]]]:
    """
    Per-epoch mean |theta - theta_anchor| over parameters with F > threshold
    and over the rest. An empty group yields None.
    """
    if threshold <= 0:
        raise ArgumentException(f"Fisher threshold must be positive, got {threshold}")
    anchor = np.asarray(theta_anchor, dtype=float)
    large = np.asarray(fisher, dtype=float) > threshold
    small = ~large
    out: List[Tuple[Optional[float], Optional[float]]] = []
    for theta in theta_trajectory:
        delta = np.abs(np.asarray(theta, dtype=float) - anchor)
        out.append((
            float(delta[large].mean()) if large.any() else None,
            float(delta[small].mean()) if small.any() else None,
        ))
    return out


def metrics_to_csv(records: Sequence[MetricsRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def write_metrics_csv(records: Sequence[MetricsRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(metrics_to_csv(records))
    except OSError as e:
        raise DataIOException(f"cannot write metrics to {path}: {e}")
    logger.info(f"Wrote {len(records)} metric rows to {path}")
    return path
