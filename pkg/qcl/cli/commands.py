"""
Command implementations behind the ``qcl`` subcommands.

Each command takes a validated ``ExperimentConfig`` plus the output
directory, writes its artifacts there and returns its in-memory result.
Machine-readable output goes to files; standard out only carries CSV when a
caller asks for it.
"""
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from qcl.core.exceptions import (
    ConfigException,
    ConvergenceException,
    DataIOException,
    GradientCheckException,
)
from qcl.schemas.experiment import ExperimentConfig, GradcheckSettings, GroundStateSettings, SweepSettings
from qcl.services.autodiff.gradcheck import GradcheckReport, gradient_check
from qcl.services.baseline.sweep import SweepRow, lambda_sweep, summarize_sweep, write_sweep_csv
from qcl.services.datasets.cluster_ising import (
    exact_ground_state,
    string_order,
    string_order_thermodynamic,
    variational_ground_prep,
)
from qcl.services.datasets.storage import save_task
from qcl.services.datasets.types import TaskDataset
from qcl.services.factory import get_experiment_factory
from qcl.services.learning.metrics import metrics_to_csv, write_metrics_csv
from qcl.services.learning.trainer import ContinualResult, run_continual
from qcl.utils.json_logger import performance_logger
from qcl.utils.logger import log_function_call

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

GROUNDSTATE_HEADER = [
    "n", "h", "exact_energy", "variational_energy", "relative_gap",
    "oz_exact", "oz_variational", "oz_thermodynamic", "iterations", "converged",
]


def _write_json(payload: Dict[str, Any], path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str))
    except OSError as e:
        raise DataIOException(f"cannot write {path}: {e}")
    return path


def _seeded_stages(config: ExperimentConfig):
    """Stage batch seeds offset by the master seed."""
    return [s.model_copy(update={"seed": s.seed + config.seed}) for s in config.stages]


def _build_tasks(config: ExperimentConfig) -> List[TaskDataset]:
    factory = get_experiment_factory(config.threads)
    return [factory.build_task(spec, seed=config.seed + i) for i, spec in enumerate(config.tasks)]


@log_function_call
def cmd_gradcheck(
    config: ExperimentConfig, out_dir: PathLike, inject_sign_flip: bool = False
) -> GradcheckReport:
    """Finite-difference audit of the analytic gradients; raises when any coordinate deviates."""
    opts = config.gradcheck or GradcheckSettings()
    report = gradient_check(
        n_instances=opts.instances,
        qubit_range=(opts.min_qubits, opts.max_qubits),
        step=opts.step,
        tolerance=opts.tolerance,
        seed=config.seed,
        method=opts.method,
        inject_sign_flip=inject_sign_flip,
    )
    summary = report.summary()
    summary["injected_sign_flip"] = inject_sign_flip
    summary["per_instance"] = [
        {"encoding": i.encoding, "n_qubits": i.n_qubits, "n_params": i.n_params,
         "max_deviation": i.max_deviation}
        for i in report.instances
    ]
    _write_json(summary, Path(out_dir) / "gradcheck.json")
    logger.info(
        f"Gradient check: {len(report.instances)} instances, "
        f"max deviation {report.max_deviation:.3e} (tolerance {report.tolerance:.0e})"
    )
    if not report.passed:
        raise GradientCheckException(
            f"max deviation {report.max_deviation:.3e} exceeds {report.tolerance:.0e}",
            details={"max_deviation": report.max_deviation, "instances": len(report.instances)},
        )
    return report


@log_function_call
def cmd_prepare_data(config: ExperimentConfig, out_dir: PathLike) -> List[Path]:
    """Build every configured task and save it under ``<out>/task_<i>``."""
    if not config.tasks:
        raise ConfigException("no [task.N] sections to prepare")
    factory = get_experiment_factory(config.threads)
    written = []
    for i, spec in enumerate(config.tasks, start=1):
        task_seed = spec.seed if spec.seed is not None else config.seed + i - 1
        task = factory.build_task(spec, seed=config.seed + i - 1)
        extra = {"seed": task_seed, "spec": spec.model_dump(mode="json")}
        total = task.metadata.get("total")
        if total:
            extra["discard_rate"] = 1.0 - task.metadata.get("kept", 0) / total
        written.append(save_task(task, Path(out_dir) / f"task_{i}", extra=extra))
    return written


@log_function_call
def cmd_train(
    config: ExperimentConfig,
    out_dir: PathLike,
    resume: Optional[PathLike] = None,
    stdout_csv: bool = False,
) -> ContinualResult:
    """Staged continual learning; metrics.csv plus one checkpoint per stage."""
    try:
        config.require_training()
    except ValueError as e:
        raise ConfigException(str(e))
    out_dir = Path(out_dir)
    factory = get_experiment_factory(config.threads)
    model = factory.build_model(config.model)
    tasks = _build_tasks(config)

    result = run_continual(
        model,
        tasks,
        _seeded_stages(config),
        seed=config.seed,
        checkpoint_dir=out_dir,
        resume_from=resume,
        threads=config.threads,
    )
    write_metrics_csv(result.metrics, out_dir / "metrics.csv")
    if stdout_csv:
        sys.stdout.write(metrics_to_csv(result.metrics))
        sys.stdout.flush()
    np.save(out_dir / "theta_final.npy", result.theta)
    return result


@log_function_call
def cmd_sweep(config: ExperimentConfig, out_dir: PathLike) -> List[SweepRow]:
    """Task A then task B with every lambda of the grid on stage 2."""
    try:
        config.require_training()
    except ValueError as e:
        raise ConfigException(str(e))
    if len(config.tasks) != 2:
        raise ConfigException(f"a sweep needs exactly two tasks, got {len(config.tasks)}")
    opts = config.sweep or SweepSettings()
    factory = get_experiment_factory(config.threads)
    task_a, task_b = _build_tasks(config)
    stage_a, stage_b = config.stages

    rows = lambda_sweep(
        task_a,
        task_b,
        opts.lambdas,
        opts.repeats,
        factory.model_factory(config.model),
        (stage_a, stage_b),
        base_seed=config.seed,
        threads=config.threads,
    )
    out_dir = Path(out_dir)
    write_sweep_csv(rows, out_dir / "sweep.csv")
    _write_json(
        {"model": config.model.type, "summary": [asdict(s) for s in summarize_sweep(rows)]},
        out_dir / "sweep_summary.json",
    )
    return rows


@log_function_call
def cmd_groundstate(
    config: ExperimentConfig,
    out_dir: PathLike,
    n: Optional[int] = None,
    fields: Optional[List[float]] = None,
) -> List[Dict[str, Any]]:
    """
    Variational ground states of the cluster-Ising chain, compared with exact
    diagonalization when enabled.

    Raises:
        ConvergenceException: when a variational energy misses the exact one by
            more than the configured percentage (the report is written first)
    """
    opts = config.groundstate or GroundStateSettings()
    n = n or opts.n
    fields = fields if fields is not None else opts.fields
    out_dir = Path(out_dir)
    started = time.time()

    rows: List[Dict[str, Any]] = []
    for k, h in enumerate(fields):
        result = variational_ground_prep(
            n, h,
            n_blocks=opts.blocks,
            max_iters=opts.max_iters,
            lr=opts.learning_rate,
            seed=config.seed + k,
            method=opts.method,
            n_restarts=opts.restarts,
        )
        alpha_path = out_dir / f"alpha_n{n}_h{h:.4f}.npy"
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            np.save(alpha_path, result.alpha_star)
        except OSError as e:
            raise DataIOException(f"cannot write {alpha_path}: {e}")

        row: Dict[str, Any] = {
            "n": n,
            "h": h,
            "exact_energy": None,
            "variational_energy": result.energy,
            "relative_gap": None,
            "oz_exact": None,
            "oz_variational": string_order(result.state),
            "oz_thermodynamic": string_order_thermodynamic(h),
            "iterations": result.iterations,
            "converged": result.converged,
        }
        if opts.exact:
            e0, psi = exact_ground_state(n, h)
            row["exact_energy"] = e0
            row["relative_gap"] = abs(result.energy - e0) / abs(e0)
            row["oz_exact"] = string_order(psi)
        logger.info(
            f"Ground state n={n} h={h}: E_var={result.energy:.6f} E_exact={row['exact_energy']} "
            f"O_z={row['oz_variational']:.4f}"
        )
        rows.append(row)

    path = out_dir / "groundstate.csv"
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(GROUNDSTATE_HEADER)
            for row in rows:
                writer.writerow(["" if row[c] is None else row[c] for c in GROUNDSTATE_HEADER])
    except OSError as e:
        raise DataIOException(f"cannot write {path}: {e}")

    performance_logger.log_operation(
        "groundstate", (time.time() - started) * 1000, success=True,
        metadata={"n": n, "fields": list(fields)},
    )
    misses = [r for r in rows if r["relative_gap"] is not None
              and r["relative_gap"] * 100.0 > opts.tolerance_pct]
    if misses:
        raise ConvergenceException(
            f"{len(misses)} variational energies miss the exact value by more than "
            f"{opts.tolerance_pct}%",
            details={"fields": [r["h"] for r in misses]},
        )
    return rows
