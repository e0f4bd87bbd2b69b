from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from qcl.core.config import settings
from qcl.schemas.training import StageConfig
from qcl.services.datasets.types import PrepMethod, TaskKind

TASK_SOURCES = ("dir", "idx", "csv", "synthetic", "phase")


class ModelSpec(BaseModel):
    """Quantum circuit classifier or feedforward baseline."""
    type: str = Field("quantum", description="quantum or ffnn")
    qubits: int = Field(10, ge=1, le=24)
    blocks: int = Field(3, ge=1)
    entangler: str = Field("CNOT")
    readout: int = Field(0, ge=0)
    encoded: int = Field(0, ge=0, description="Interleaved data slots")
    data_scale: float = Field(default_factory=lambda: settings.INTERLEAVED_SCALE)
    rotation_order: Tuple[str, str, str] = Field(default_factory=lambda: tuple(settings.ROTATION_ORDER))
    feature_t: float = Field(default_factory=lambda: settings.FEATURE_ENCODING_T)
    init_low: float = Field(-3.141592653589793)
    init_high: float = Field(3.141592653589793)
    gradient_method: str = Field(default_factory=lambda: settings.GRADIENT_METHOD)
    inputs: int = Field(10, ge=1, description="FFNN input width")
    hidden: int = Field(20, ge=1, description="FFNN hidden width")

    @field_validator("type")
    @classmethod
    def known_type(cls, v: str) -> str:
        v = v.lower()
        if v not in ("quantum", "ffnn"):
            raise ValueError(f"model type must be 'quantum' or 'ffnn', got {v!r}")
        return v

    @field_validator("entangler")
    @classmethod
    def known_entangler(cls, v: str) -> str:
        v = v.upper()
        if v not in ("CNOT", "CZ"):
            raise ValueError(f"entangler must be CNOT or CZ, got {v!r}")
        return v

    @field_validator("gradient_method")
    @classmethod
    def known_method(cls, v: str) -> str:
        v = v.lower()
        if v not in ("parameter_shift", "adjoint"):
            raise ValueError(f"gradient method must be parameter_shift or adjoint, got {v!r}")
        return v

    @model_validator(mode="after")
    def readout_in_range(self) -> "ModelSpec":
        if self.readout >= self.qubits:
            raise ValueError(f"readout qubit {self.readout} outside {self.qubits} qubits")
        if self.encoded > 3 * self.qubits * self.blocks:
            raise ValueError(f"{self.encoded} data slots exceed {3 * self.qubits * self.blocks} rotations")
        return self


class TaskSpec(BaseModel):
    """Where a task's data comes from and how it is turned into samples."""
    kind: TaskKind
    source: str = Field(..., description="dir, idx, csv, synthetic or phase")
    name: str = ""
    path: Optional[str] = Field(None, description="Prepared dataset directory or CSV file")
    images: Optional[str] = None
    labels: Optional[str] = None
    classes: Tuple[int, int] = Field(default_factory=lambda: tuple(settings.IMAGE_CLASSES))
    train: int = Field(500, ge=1)
    test: int = Field(100, ge=1)
    total: int = Field(1200, ge=2, description="Candidate pool for engineered labels")
    dim: int = Field(10, ge=1)
    separation: float = Field(3.0, ge=0)
    n: int = Field(10, ge=4, description="Qubits of phase-task states")
    prep: PrepMethod = PrepMethod.VARIATIONAL
    prepare_states: bool = False
    components: int = Field(default_factory=lambda: settings.PCA_COMPONENTS, ge=1)
    seed: Optional[int] = None

    @field_validator("source")
    @classmethod
    def known_source(cls, v: str) -> str:
        v = v.lower()
        if v not in TASK_SOURCES:
            raise ValueError(f"task source must be one of {TASK_SOURCES}, got {v!r}")
        return v

    @model_validator(mode="after")
    def source_fields(self) -> "TaskSpec":
        if self.source == "dir" and not self.path:
            raise ValueError("source 'dir' needs path")
        if self.source == "csv" and not self.path:
            raise ValueError("source 'csv' needs path")
        if self.source == "idx" and not (self.images and self.labels):
            raise ValueError("source 'idx' needs images and labels")
        if self.source == "phase" and self.kind != TaskKind.QUANTUM_PHASE:
            raise ValueError("source 'phase' only builds QUANTUM_PHASE tasks")
        return self


class SweepSettings(BaseModel):
    lambdas: List[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0, 20.0, 40.0, 100.0])
    repeats: int = Field(10, ge=1)

    @field_validator("lambdas")
    @classmethod
    def non_negative(cls, v: List[float]) -> List[float]:
        if not v or any(lam < 0 for lam in v):
            raise ValueError("lambdas must be a nonempty list of non-negative values")
        return v


class GroundStateSettings(BaseModel):
    n: int = Field(8, ge=4)
    fields: List[float] = Field(default_factory=lambda: [0.3, 2.8])
    blocks: int = Field(default_factory=lambda: settings.VQE_BLOCKS, ge=1)
    max_iters: int = Field(default_factory=lambda: settings.VQE_MAX_ITERS, ge=1)
    learning_rate: float = Field(default_factory=lambda: settings.VQE_LEARNING_RATE, gt=0)
    method: str = Field(default_factory=lambda: settings.VQE_GRADIENT_METHOD)
    restarts: int = Field(1, ge=1)
    exact: bool = True
    tolerance_pct: float = Field(2.0, gt=0, description="Allowed gap to the exact energy, percent")


class GradcheckSettings(BaseModel):
    instances: int = Field(default_factory=lambda: settings.GRADCHECK_INSTANCES, ge=1)
    min_qubits: int = Field(2, ge=1)
    max_qubits: int = Field(6, ge=1)
    step: float = Field(default_factory=lambda: settings.GRADCHECK_STEP, gt=0)
    tolerance: float = Field(default_factory=lambda: settings.GRADCHECK_TOLERANCE, gt=0)
    method: str = "parameter_shift"

    @model_validator(mode="after")
    def ordered_range(self) -> "GradcheckSettings":
        if self.min_qubits > self.max_qubits:
            raise ValueError("min_qubits must not exceed max_qubits")
        return self


class ExperimentConfig(BaseModel):
    """A full experiment file after parsing."""
    name: str = "experiment"
    seed: int = 0
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    threads: int = Field(default_factory=lambda: settings.DEFAULT_THREADS, ge=1)
    model: ModelSpec = Field(default_factory=ModelSpec)
    tasks: List[TaskSpec] = Field(default=[])
    stages: List[StageConfig] = Field(default=[])
    sweep: Optional[SweepSettings] = None
    groundstate: Optional[GroundStateSettings] = None
    gradcheck: Optional[GradcheckSettings] = None

    def require_training(self) -> None:
        """Stage count must equal task count for train and sweep runs."""
        if not self.tasks:
            raise ValueError("no [task.N] sections")
        if len(self.stages) != len(self.tasks):
            raise ValueError(f"{len(self.tasks)} tasks but {len(self.stages)} [stage.N] sections")
