"""
Regularization-strength sweep: train task A then task B with EWC strength
lambda on the second stage, repeated over seeds.
"""
import csv
import io
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from qcl.core.exceptions import ArgumentException, DataIOException
from qcl.schemas.training import StageConfig
from qcl.services.datasets.types import TaskDataset
from qcl.services.learning.metrics import evaluate_accuracy
from qcl.services.learning.models import ClassifierModel
from qcl.services.learning.trainer import run_continual
from qcl.utils.json_logger import performance_logger
from qcl.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

SWEEP_HEADER = ["lambda", "seed", "acc_task_a", "acc_task_b", "overall"]


@dataclass(frozen=True)
class SweepRow:
    lam: float
    seed: int
    acc_task_a: float
    acc_task_b: float

    @property
    def overall(self) -> float:
        return 0.5 * (self.acc_task_a + self.acc_task_b)


@dataclass(frozen=True)
class SweepSummary:
    lam: float
    mean_acc_task_a: float
    mean_acc_task_b: float
    mean_overall: float
    repeats: int


def _one_run(
    model_factory: Callable[[], ClassifierModel],
    task_a: TaskDataset,
    task_b: TaskDataset,
    stage_a: StageConfig,
    stage_b: StageConfig,
    lam: float,
    seed: int,
) -> SweepRow:
    model = model_factory()
    configs = [
        stage_a.model_copy(update={"seed": stage_a.seed + seed}),
        stage_b.model_copy(update={"seed": stage_b.seed + seed, "lambdas": {1: lam}}),
    ]
    result = run_continual(model, [task_a, task_b], configs, seed=seed, threads=1)
    return SweepRow(
        lam=lam,
        seed=seed,
        acc_task_a=evaluate_accuracy(model, result.theta, task_a.test, task_a.task_kind),
        acc_task_b=evaluate_accuracy(model, result.theta, task_b.test, task_b.task_kind),
    )


def lambda_sweep(
    task_a: TaskDataset,
    task_b: TaskDataset,
    lambdas: Sequence[float],
    repeats: int,
    model_factory: Callable[[], ClassifierModel],
    stage_configs: Tuple[StageConfig, StageConfig],
    base_seed: int = 0,
    threads: Optional[int] = None,
) -> List[SweepRow]:
    """
    One row per (lambda, repeat). Repeats use seeds base_seed .. base_seed+repeats-1
    for model initialization and batch sampling; they run concurrently up to
    ``threads`` and are collected in (lambda, seed) order.
    """
    if repeats < 1:
        raise ArgumentException(f"repeats must be >= 1, got {repeats}")
    if any(lam < 0 for lam in lambdas):
        raise ArgumentException("lambda values must be non-negative")
    stage_a, stage_b = stage_configs
    jobs = [(float(lam), base_seed + r) for lam in lambdas for r in range(repeats)]
    started = time.time()
    rows = ordered_map(
        lambda job: _one_run(model_factory, task_a, task_b, stage_a, stage_b, job[0], job[1]),
        jobs,
        threads,
    )
    performance_logger.log_operation(
        "lambda_sweep",
        (time.time() - started) * 1000,
        success=True,
        metadata={"lambdas": list(lambdas), "repeats": repeats},
    )
    return rows


def summarize_sweep(rows: Sequence[SweepRow]) -> List[SweepSummary]:
    """Seed-averaged accuracies per lambda, in first-seen lambda order."""
    groups: Dict[float, List[SweepRow]] = {}
    for row in rows:
        groups.setdefault(row.lam, []).append(row)
    return [
        SweepSummary(
            lam=lam,
            mean_acc_task_a=float(np.mean([r.acc_task_a for r in rs])),
            mean_acc_task_b=float(np.mean([r.acc_task_b for r in rs])),
            mean_overall=float(np.mean([r.overall for r in rs])),
            repeats=len(rs),
        )
        for lam, rs in groups.items()
    ]


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([repr(r.lam), r.seed, repr(r.acc_task_a), repr(r.acc_task_b), repr(r.overall)])
    return buf.getvalue()


def write_sweep_csv(rows: Sequence[SweepRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(sweep_to_csv(rows))
    except OSError as e:
        raise DataIOException(f"cannot write sweep results to {path}: {e}")
    logger.info(f"Wrote {len(rows)} sweep rows to {path}")
    return path
