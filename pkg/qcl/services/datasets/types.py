"""Dataset containers shared by every task pipeline."""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from qcl.core.exceptions import ArgumentException, DatasetGenerationException
from qcl.services.learning.losses import one_hot


class TaskKind(str, Enum):
    """Decides how a classifier turns a sample into circuit input."""
    IMAGE_128 = "IMAGE_128"          # interleaved data slots
    ENGINEERED_Q = "ENGINEERED_Q"    # feature-encoding input state
    PCA_10 = "PCA_10"                # rotation-encoding input state
    QUANTUM_PHASE = "QUANTUM_PHASE"  # prepared ground state


class PrepMethod(str, Enum):
    EXACT = "EXACT"
    VARIATIONAL = "VARIATIONAL"


@dataclass(frozen=True, eq=False)
class StateRecipe:
    """How to rebuild a cluster-Ising ground state: field h, preparation and optional alpha*."""
    h: float
    prep: PrepMethod
    n_qubits: int
    alpha: Optional[np.ndarray] = None

    def cache_key(self) -> Tuple:
        alpha = None if self.alpha is None else self.alpha.tobytes()
        return (self.n_qubits, round(float(self.h), 15), self.prep.value, alpha)


@dataclass(frozen=True, eq=False)
class Sample:
    label: Tuple[int, int]
    features: Optional[np.ndarray] = None
    state_recipe: Optional[StateRecipe] = None

    def __post_init__(self):
        if (self.features is None) == (self.state_recipe is None):
            raise ArgumentException("a sample needs exactly one of features or state_recipe")
        if tuple(self.label) not in ((1, 0), (0, 1)):
            raise ArgumentException(f"label must be one-hot, got {self.label}")

    @classmethod
    def from_class(cls, features, label: int) -> "Sample":
        return cls(label=one_hot(int(label)), features=np.asarray(features, dtype=float))

    @classmethod
    def from_recipe(cls, recipe: StateRecipe, label: int) -> "Sample":
        return cls(label=one_hot(int(label)), state_recipe=recipe)

    @property
    def label_index(self) -> int:
        return 0 if self.label[0] == 1 else 1


@dataclass
class TaskDataset:
    train: List[Sample]
    test: List[Sample]
    task_kind: TaskKind
    name: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "TaskDataset":
        """Both splits nonempty and both classes present in each."""
        for split_name, split in (("train", self.train), ("test", self.test)):
            classes = {s.label_index for s in split}
            if classes != {0, 1}:
                raise DatasetGenerationException(
                    f"{self.name or self.task_kind.value}: {split_name} split has classes "
                    f"{sorted(classes)}",
                    details={"split": split_name, "size": len(split)},
                )
        train_ids = {id(s) for s in self.train}
        if any(id(s) in train_ids for s in self.test):
            raise DatasetGenerationException("train and test splits share samples")
        return self

    def class_counts(self) -> Dict[str, List[int]]:
        def counts(split: List[Sample]) -> List[int]:
            labels = [s.label_index for s in split]
            return [labels.count(0), labels.count(1)]

        return {"train": counts(self.train), "test": counts(self.test)}


def split_train_test(
    samples: List[Sample], n_test: int, rng: np.random.Generator
) -> Tuple[List[Sample], List[Sample]]:
    """Shuffle then cut the last ``n_test`` samples off as the test split."""
    if not 0 < n_test < len(samples):
        raise ArgumentException(
            f"cannot hold out {n_test} of {len(samples)} samples for testing"
        )
    order = rng.permutation(len(samples))
    shuffled = [samples[i] for i in order]
    return shuffled[:-n_test], shuffled[-n_test:]
