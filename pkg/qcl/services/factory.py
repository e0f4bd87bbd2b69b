"""
Experiment factory: turns validated model and task specs into classifier
models and task datasets.
"""
import logging
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np

from qcl.core.config import settings
from qcl.core.exceptions import ConfigException, DataIOException
from qcl.schemas.experiment import ModelSpec, TaskSpec
from qcl.services.baseline.ffnn import FeedforwardClassifier, FfnnLayout
from qcl.services.datasets.engineered import generate_engineered_task
from qcl.services.datasets.images import build_image_task, load_idx_corpus, resize_image
from qcl.services.datasets.pca import build_pca_task, pca_apply, pca_fit
from qcl.services.datasets.phase import sample_phase_dataset
from qcl.services.datasets.storage import load_task, read_vector_csv
from qcl.services.datasets.synthetic import synthetic_two_class
from qcl.services.datasets.types import Sample, TaskDataset, TaskKind, split_train_test
from qcl.services.learning.models import ClassifierModel, QuantumClassifier
from qcl.utils.json_logger import performance_logger

logger = logging.getLogger(__name__)


class ExperimentFactory:
    """Builds models and datasets from schema objects."""

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.DEFAULT_THREADS

    # -- models -------------------------------------------------------------

    def build_model(self, spec: ModelSpec) -> ClassifierModel:
        if spec.type == "ffnn":
            return FeedforwardClassifier(FfnnLayout(n_in=spec.inputs, n_hidden=spec.hidden))
        return QuantumClassifier(
            n_qubits=spec.qubits,
            n_blocks=spec.blocks,
            entangler=spec.entangler,
            readout_qubit=spec.readout,
            n_encoded=spec.encoded,
            data_scale=spec.data_scale,
            rotation_order=spec.rotation_order,
            feature_t=spec.feature_t,
            init_range=(spec.init_low, spec.init_high),
            gradient_method=spec.gradient_method,
        )

    def model_factory(self, spec: ModelSpec) -> Callable[[], ClassifierModel]:
        """Fresh model per call, so concurrent sweep repeats never share a state cache."""
        return lambda: self.build_model(spec)

    # -- tasks --------------------------------------------------------------

    def build_task(self, spec: TaskSpec, seed: int = 0) -> TaskDataset:
        """
        Load or generate the dataset described by ``spec``.

        Raises:
            DataIOException: when a referenced path does not exist
            ConfigException: when the source cannot produce the requested kind
        """
        seed = spec.seed if spec.seed is not None else seed
        started = time.time()
        if spec.source == "dir":
            task = self._from_dir(spec)
        elif spec.source == "phase":
            task = sample_phase_dataset(
                spec.n,
                spec.train,
                spec.test,
                prep=spec.prep,
                seed=seed,
                prepare_states=spec.prepare_states,
                threads=self.threads,
            )
        elif spec.kind == TaskKind.IMAGE_128 and spec.source == "idx":
            images, labels = load_idx_corpus(self._existing(spec.images), self._existing(spec.labels))
            task = build_image_task(
                images, labels, spec.classes, spec.train, spec.test, seed=seed, name="image"
            )
        elif spec.kind == TaskKind.PCA_10 and spec.source == "synthetic":
            task = synthetic_two_class(
                spec.dim, spec.train, spec.separation, seed=seed, n_test=spec.test
            )
        else:
            task = self._from_vectors(spec, seed)

        if spec.name:
            task = replace(task, name=spec.name)
        performance_logger.log_operation(
            "build_task",
            (time.time() - started) * 1000,
            success=True,
            metadata={"kind": task.task_kind.value, "source": spec.source, "counts": task.class_counts()},
        )
        return task

    @staticmethod
    def _existing(path: Optional[str]) -> Path:
        if not path or not Path(path).exists():
            raise DataIOException(f"source path {path!r} does not exist")
        return Path(path)

    def _from_dir(self, spec: TaskSpec) -> TaskDataset:
        task = load_task(self._existing(spec.path))
        if task.task_kind != spec.kind:
            raise ConfigException(
                f"{spec.path} holds a {task.task_kind.value} task, config expects {spec.kind.value}"
            )
        return task

    def _raw_vectors(self, spec: TaskSpec, count: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """``count`` labelled feature vectors from an idx corpus, a CSV file or a Gaussian pair."""
        if spec.source == "csv":
            samples = read_vector_csv(self._existing(spec.path))
            if not samples:
                raise DataIOException(f"{spec.path} holds no samples")
            samples = samples[:count]
            return (
                np.array([s.features for s in samples]),
                np.array([s.label_index for s in samples]),
            )
        if spec.source == "synthetic":
            task = synthetic_two_class(spec.dim, count, spec.separation, seed=seed)
            return (
                np.array([s.features for s in task.train]),
                np.array([s.label_index for s in task.train]),
            )
        images, labels = load_idx_corpus(self._existing(spec.images), self._existing(spec.labels))
        rng = np.random.default_rng(seed)
        rows, ys = [], []
        for label, cls in enumerate(spec.classes):
            pool = np.flatnonzero(labels == cls)
            take = count // 2 + (count % 2 if label == 0 else 0)
            if pool.size < take:
                raise ConfigException(f"class {cls} has {pool.size} images, {take} requested")
            for i in rng.choice(pool, size=take, replace=False):
                rows.append(resize_image(images[i]).ravel())
                ys.append(label)
        order = rng.permutation(len(rows))
        return np.array(rows)[order], np.array(ys)[order]

    def _from_vectors(self, spec: TaskSpec, seed: int) -> TaskDataset:
        if spec.kind == TaskKind.ENGINEERED_Q:
            X, _ = self._raw_vectors(spec, spec.total, seed)
            if X.shape[1] > spec.components:
                X = pca_apply(pca_fit(X, spec.components), X)
            return generate_engineered_task(X, seed=seed)

        X, y = self._raw_vectors(spec, spec.train + spec.test, seed)
        if spec.kind == TaskKind.PCA_10:
            return build_pca_task(X, y, n_test=spec.test, k=spec.components, seed=seed)
        if spec.kind == TaskKind.IMAGE_128:
            samples = [Sample.from_class(x, label) for x, label in zip(X, y)]
            train, test = split_train_test(samples, spec.test, np.random.default_rng(seed))
            return TaskDataset(train, test, TaskKind.IMAGE_128, "image", {"seed": seed}).validate()
        raise ConfigException(f"source {spec.source!r} cannot build a {spec.kind.value} task")


_experiment_factory: Optional[ExperimentFactory] = None


def get_experiment_factory(threads: Optional[int] = None) -> ExperimentFactory:
    """Get or create the experiment factory singleton."""
    global _experiment_factory
    if _experiment_factory is None:
        _experiment_factory = ExperimentFactory(threads)
    elif threads is not None:
        _experiment_factory.threads = threads
    return _experiment_factory
