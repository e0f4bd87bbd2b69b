"""
Dataset files.

Vector tasks: ``<name>_train.csv`` / ``<name>_test.csv`` with header
``f0,...,f{d-1},label``. Phase tasks: rows ``h,prep,label`` plus
``alpha_<i>.npy`` sidecars (row order, train rows first) when alpha* is known.
A ``manifest.json`` next to the files records kind, seeds and counts.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from qcl.core.exceptions import DataIOException
from qcl.services.datasets.types import PrepMethod, Sample, StateRecipe, TaskDataset, TaskKind

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_vector_csv(samples: List[Sample], path: PathLike) -> Path:
    path = Path(path)
    if not samples:
        raise DataIOException(f"refusing to write an empty dataset to {path}")
    dim = samples[0].features.size
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"f{i}" for i in range(dim)] + ["label"])
            for s in samples:
                writer.writerow([repr(float(v)) for v in s.features] + [s.label_index])
    except OSError as e:
        raise DataIOException(f"cannot write {path}: {e}")
    return path


def read_vector_csv(path: PathLike) -> List[Sample]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataIOException(f"cannot read {path}: {e}")
    if not rows or rows[0][-1] != "label":
        raise DataIOException(f"{path}: expected header f0,...,label")
    try:
        return [Sample.from_class([float(v) for v in r[:-1]], int(r[-1])) for r in rows[1:] if r]
    except ValueError as e:
        raise DataIOException(f"{path}: malformed row: {e}")


def write_phase_csv(samples: List[Sample], path: PathLike, sidecar_offset: int = 0) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["h", "prep", "label"])
            for i, s in enumerate(samples):
                r = s.state_recipe
                writer.writerow([repr(float(r.h)), r.prep.value, s.label_index])
                if r.alpha is not None:
                    np.save(path.parent / f"alpha_{sidecar_offset + i}.npy", r.alpha)
    except OSError as e:
        raise DataIOException(f"cannot write {path}: {e}")
    return path


def read_phase_csv(path: PathLike, n_qubits: int, sidecar_offset: int = 0) -> List[Sample]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as e:
        raise DataIOException(f"cannot read {path}: {e}")
    samples = []
    for i, row in enumerate(rows):
        sidecar = path.parent / f"alpha_{sidecar_offset + i}.npy"
        alpha = np.load(sidecar) if sidecar.is_file() else None
        recipe = StateRecipe(float(row["h"]), PrepMethod(row["prep"]), n_qubits, alpha)
        samples.append(Sample.from_recipe(recipe, int(row["label"])))
    return samples


def write_manifest(directory: PathLike, payload: Dict[str, Any]) -> Path:
    path = Path(directory) / "manifest.json"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str))
    except OSError as e:
        raise DataIOException(f"cannot write {path}: {e}")
    return path


def read_manifest(directory: PathLike) -> Dict[str, Any]:
    path = Path(directory) / "manifest.json"
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataIOException(f"cannot read dataset manifest {path}: {e}")


def _dataset_paths(directory: Path, name: str) -> Tuple[Path, Path]:
    return directory / f"{name}_train.csv", directory / f"{name}_test.csv"


def save_task(task: TaskDataset, directory: PathLike, extra: Optional[Dict[str, Any]] = None) -> Path:
    """Write both splits and a manifest into ``directory``."""
    directory = Path(directory)
    name = task.name or task.task_kind.value.lower()
    train_path, test_path = _dataset_paths(directory, name)
    if task.task_kind == TaskKind.QUANTUM_PHASE:
        write_phase_csv(task.train, train_path)
        write_phase_csv(task.test, test_path, sidecar_offset=len(task.train))
    else:
        write_vector_csv(task.train, train_path)
        write_vector_csv(task.test, test_path)
    metadata = {k: v for k, v in task.metadata.items() if k != "z_values"}
    write_manifest(directory, {
        "name": name,
        "task_kind": task.task_kind.value,
        "counts": task.class_counts(),
        "metadata": metadata,
        **(extra or {}),
    })
    logger.info(f"Saved task {name} ({len(task.train)}/{len(task.test)}) to {directory}")
    return directory


def load_task(directory: PathLike) -> TaskDataset:
    """Inverse of ``save_task``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataIOException(f"dataset directory {directory} does not exist")
    manifest = read_manifest(directory)
    kind = TaskKind(manifest["task_kind"])
    train_path, test_path = _dataset_paths(directory, manifest["name"])
    if kind == TaskKind.QUANTUM_PHASE:
        n = int(manifest["metadata"]["n"])
        train = read_phase_csv(train_path, n)
        test = read_phase_csv(test_path, n, sidecar_offset=len(train))
    else:
        train, test = read_vector_csv(train_path), read_vector_csv(test_path)
    return TaskDataset(train, test, kind, manifest["name"], manifest.get("metadata", {}))
