"""
Training checkpoints as numpy ``.npz`` archives.

Keys: format_version, n_params, theta, first_moment, second_moment,
optimizer (step_count, beta1, beta2, epsilon), completed_stages,
anchors (S x n), fishers (S x n), lambdas (rows of stage, prior, lambda),
metrics (rows of stage, epoch, task_id, accuracy, loss, dtheta_largeF,
dtheta_smallF with NaN for missing values).
"""
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import CheckpointFormatException, DataIOException
from qcl.schemas.training import MetricsRecord
from qcl.services.learning.ewc import EwcHistory
from qcl.services.learning.optimizer import OptimizerState

logger = logging.getLogger(__name__)

REQUIRED_KEYS = (
    "format_version", "n_params", "theta", "first_moment", "second_moment", "optimizer",
    "completed_stages", "anchors", "fishers", "lambdas", "metrics",
)


@dataclass
class Checkpoint:
    theta: np.ndarray
    opt_state: OptimizerState
    history: EwcHistory
    completed_stages: int
    metrics: List[MetricsRecord] = field(default_factory=list)


def _metrics_array(records: List[MetricsRecord]) -> np.ndarray:
    def num(v):
        return np.nan if v is None else float(v)

    rows = [
        [r.stage, r.epoch, r.task_id, r.accuracy, r.loss, num(r.dtheta_large_f), num(r.dtheta_small_f)]
        for r in records
    ]
    return np.array(rows, dtype=float).reshape(len(rows), 7)


def _metrics_records(arr: np.ndarray) -> List[MetricsRecord]:
    def opt(v):
        return None if np.isnan(v) else float(v)

    return [
        MetricsRecord(
            stage=int(row[0]), epoch=int(row[1]), task_id=int(row[2]),
            accuracy=float(row[3]), loss=float(row[4]),
            dtheta_large_f=opt(row[5]), dtheta_small_f=opt(row[6]),
        )
        for row in arr
    ]


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    h = checkpoint.history
    n = h.n_params
    lambdas = [
        [stage, t, lam] for stage, row in sorted(h.lambda_matrix.items()) for t, lam in sorted(row.items())
    ]
    opt = checkpoint.opt_state
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as fh:
            np.savez(
                fh,
                format_version=np.array(settings.CHECKPOINT_VERSION),
                n_params=np.array(n),
                theta=np.asarray(checkpoint.theta, dtype=float),
                first_moment=opt.first_moment,
                second_moment=opt.second_moment,
                optimizer=np.array([opt.step_count, opt.beta1, opt.beta2, opt.epsilon], dtype=float),
                completed_stages=np.array(checkpoint.completed_stages),
                anchors=np.array([a.theta_star for a in h.stages], dtype=float).reshape(-1, n),
                fishers=np.array([a.fisher for a in h.stages], dtype=float).reshape(-1, n),
                lambdas=np.array(lambdas, dtype=float).reshape(-1, 3),
                metrics=_metrics_array(checkpoint.metrics),
            )
    except OSError as e:
        raise DataIOException(f"cannot write checkpoint {path}: {e}")
    logger.info(f"Checkpoint after stage {checkpoint.completed_stages} written to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Raises:
        DataIOException: file missing or unreadable
        CheckpointFormatException: corrupt archive, missing keys or unknown version
    """
    path = Path(path)
    if not path.is_file():
        raise DataIOException(f"checkpoint {path} does not exist")
    try:
        with np.load(path, allow_pickle=False) as archive:
            data = {k: archive[k] for k in archive.files}
    except (ValueError, OSError, zipfile.BadZipFile, EOFError) as e:
        raise CheckpointFormatException(f"{path} is not a readable checkpoint: {e}")

    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise CheckpointFormatException(f"{path} lacks keys {missing}")
    version = int(data["format_version"])
    if version != settings.CHECKPOINT_VERSION:
        raise CheckpointFormatException(
            f"{path} has format version {version}, expected {settings.CHECKPOINT_VERSION}",
            details={"version": version},
        )

    n = int(data["n_params"])
    step_count, beta1, beta2, epsilon = data["optimizer"].tolist()
    opt_state = OptimizerState(
        first_moment=data["first_moment"],
        second_moment=data["second_moment"],
        step_count=int(step_count),
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )
    history = EwcHistory(n_params=n)
    for theta_star, fisher in zip(data["anchors"], data["fishers"]):
        history.append(theta_star, fisher)
    for stage, t, lam in data["lambdas"]:
        history.lambda_matrix.setdefault(int(stage), {})[int(t)] = float(lam)

    theta = data["theta"]
    if theta.shape != (n,) or opt_state.first_moment.shape != (n,):
        raise CheckpointFormatException(f"{path} holds vectors inconsistent with n_params={n}")
    return Checkpoint(
        theta=theta,
        opt_state=opt_state,
        history=history,
        completed_stages=int(data["completed_stages"]),
        metrics=_metrics_records(data["metrics"]),
    )
