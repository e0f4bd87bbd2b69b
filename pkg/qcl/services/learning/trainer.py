"""
Staged continual learning with EWC.

Per stage k: reset the optimizer; for each epoch draw one batch without
replacement, average per-sample loss gradients in batch order, add the EWC
term, take one optimizer step and evaluate every task seen so far. After the
last epoch the Fisher diagonal on the stage's training set is appended to the
history.
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from qcl.core.exceptions import ArgumentException, ConfigException
from qcl.schemas.training import MetricsRecord, StageConfig
from qcl.services.datasets.types import TaskDataset
from qcl.services.learning.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from qcl.services.learning.ewc import EwcHistory, ewc_grad
from qcl.services.learning.metrics import evaluate_task, parameter_change_stats
from qcl.services.learning.models import ClassifierModel
from qcl.services.learning.optimizer import OptimizerState, get_step_fn
from qcl.utils.json_logger import training_logger
from qcl.utils.parallel import ordered_map, sequential_sum

logger = logging.getLogger(__name__)


@dataclass
class StageResult:
    theta_star: np.ndarray
    fisher: np.ndarray
    metrics: List[MetricsRecord]
    trajectory: List[np.ndarray]
    opt_state: OptimizerState


@dataclass
class ContinualResult:
    theta: np.ndarray
    history: EwcHistory
    metrics: List[MetricsRecord] = field(default_factory=list)
    stage_results: List[StageResult] = field(default_factory=list)


def batch_gradient(
    model: ClassifierModel,
    theta: np.ndarray,
    batch: Sequence,
    kind,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Mean per-sample loss gradient, summed in batch order."""
    grads = ordered_map(lambda s: model.loss_grad_sample(theta, s, kind), batch, threads)
    return sequential_sum(grads, np.zeros(model.n_params)) / len(batch)


def train_stage(
    model: ClassifierModel,
    task: TaskDataset,
    config: StageConfig,
    history: EwcHistory,
    theta: np.ndarray,
    stage: Optional[int] = None,
    seen_tasks: Optional[Sequence[TaskDataset]] = None,
    threads: Optional[int] = None,
) -> StageResult:
    """
    One stage of EWC training; extends ``history`` by one stage.

    Args:
        theta: parameters at the start of the stage
        stage: 1-based stage index, defaults to len(history) + 1
        seen_tasks: tasks 1..stage evaluated after every epoch (default: ``task`` only)
    """
    if not task.train:
        raise ArgumentException(f"task {task.name or task.task_kind.value} has no training samples")
    stage = stage or len(history) + 1
    seen = list(seen_tasks) if seen_tasks is not None else [task]
    history.set_lambdas(stage, config.lambdas)
    step_fn = get_step_fn(config.optimizer)
    rng = np.random.default_rng(config.seed)
    opt = OptimizerState.zeros(model.n_params)
    theta = np.array(theta, dtype=float)
    batch_size = min(config.batch_size, len(task.train))

    anchor = fisher_prev = None
    if stage > 1 and len(history) >= stage - 1:
        anchor = history.anchor(stage - 1).theta_star
        fisher_prev = history.anchor(stage - 1).fisher

    started = time.time()
    metrics: List[MetricsRecord] = []
    trajectory: List[np.ndarray] = []
    for epoch in range(1, config.epochs + 1):
        idx = rng.choice(len(task.train), size=batch_size, replace=False)
        batch = [task.train[i] for i in idx]
        grad = batch_gradient(model, theta, batch, task.task_kind, threads)
        grad = ewc_grad(grad, theta, history, stage)
        opt, theta = step_fn(opt, theta, grad, config.learning_rate)
        trajectory.append(theta.copy())

        large = small = None
        if anchor is not None:
            large, small = parameter_change_stats(
                [theta], anchor, fisher_prev, config.fisher_threshold
            )[0]

        accuracies, losses = {}, {}
        for task_id, t in enumerate(seen, start=1):
            acc, loss = evaluate_task(model, theta, t.test, t.task_kind, threads)
            accuracies[task_id], losses[task_id] = acc, loss
            metrics.append(MetricsRecord(
                stage=stage, epoch=epoch, task_id=task_id, accuracy=acc, loss=loss,
                dtheta_large_f=large, dtheta_small_f=small,
            ))
        training_logger.log_epoch(stage, epoch, accuracies, losses)

    fisher = model.fisher(theta, task.train, task.task_kind, threads)
    history.append(theta, fisher)
    training_logger.log_stage(
        stage=stage,
        epochs=config.epochs,
        final_accuracies={r.task_id: r.accuracy for r in metrics[-len(seen):]},
        fisher_above_threshold=int(np.sum(fisher > config.fisher_threshold)),
        n_params=model.n_params,
        duration_ms=(time.time() - started) * 1000,
    )
    return StageResult(theta, fisher, metrics, trajectory, opt)


def run_continual(
    model: ClassifierModel,
    tasks: Sequence[TaskDataset],
    stage_configs: Sequence[StageConfig],
    seed: int = 0,
    theta0: Optional[np.ndarray] = None,
    checkpoint_dir: Optional[Union[str, Path]] = None,
    resume_from: Optional[Union[str, Path]] = None,
    threads: Optional[int] = None,
) -> ContinualResult:
    """
    Train on ``tasks`` in order, one stage per task.

    A checkpoint is written after every stage when ``checkpoint_dir`` is set;
    ``resume_from`` restarts after the stages a checkpoint already completed.
    """
    if len(tasks) != len(stage_configs):
        raise ConfigException(
            f"{len(tasks)} tasks but {len(stage_configs)} stage configurations"
        )
    if resume_from is not None:
        ckpt = load_checkpoint(resume_from)
        if ckpt.history.n_params != model.n_params:
            raise ConfigException(
                f"checkpoint has {ckpt.history.n_params} parameters, model has {model.n_params}"
            )
        theta, history, opt = ckpt.theta, ckpt.history, ckpt.opt_state
        metrics = list(ckpt.metrics)
        first = ckpt.completed_stages
        logger.info(f"Resuming after stage {first} from {resume_from}")
    else:
        theta = (
            np.array(theta0, dtype=float)
            if theta0 is not None
            else model.init_params(np.random.default_rng(seed))
        )
        history = EwcHistory(n_params=model.n_params)
        opt = OptimizerState.zeros(model.n_params)
        metrics = []
        first = 0

    result = ContinualResult(theta=theta, history=history, metrics=metrics)
    for k in range(first, len(tasks)):
        stage = k + 1
        logger.info(f"Stage {stage}/{len(tasks)}: {tasks[k].name or tasks[k].task_kind.value}")
        stage_result = train_stage(
            model, tasks[k], stage_configs[k], history, theta,
            stage=stage, seen_tasks=tasks[: k + 1], threads=threads,
        )
        theta, opt = stage_result.theta_star, stage_result.opt_state
        result.metrics.extend(stage_result.metrics)
        result.stage_results.append(stage_result)
        if checkpoint_dir is not None:
            save_checkpoint(
                Checkpoint(theta, opt, history, stage, list(result.metrics)),
                Path(checkpoint_dir) / f"checkpoint_stage{stage}.npz",
            )
    result.theta = theta
    return result
