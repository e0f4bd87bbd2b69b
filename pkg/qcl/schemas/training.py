from typing import Dict, Optional

from pydantic import BaseModel, Field, field_validator

from qcl.core.config import settings


class StageConfig(BaseModel):
    """Hyperparameters for one continual-learning stage."""
    epochs: int = Field(default_factory=lambda: settings.DEFAULT_EPOCHS, ge=1)
    batch_size: int = Field(default_factory=lambda: settings.DEFAULT_BATCH_SIZE, ge=1)
    learning_rate: float = Field(default_factory=lambda: settings.DEFAULT_LEARNING_RATE, gt=0)
    lambdas: Dict[int, float] = Field(
        default={}, description="EWC strength per prior stage (1-based)"
    )
    seed: int = Field(0, description="Seed for batch sampling")
    optimizer: str = Field(default_factory=lambda: settings.DEFAULT_OPTIMIZER)
    fisher_threshold: float = Field(
        default_factory=lambda: settings.FISHER_THRESHOLD,
        gt=0,
        description="Split point for the parameter-change groups",
    )

    @field_validator("lambdas")
    @classmethod
    def non_negative_lambdas(cls, v: Dict[int, float]) -> Dict[int, float]:
        for stage, lam in v.items():
            if stage < 1:
                raise ValueError(f"prior stage indices are 1-based, got {stage}")
            if lam < 0:
                raise ValueError(f"lambda for stage {stage} must be >= 0, got {lam}")
        return v

    @field_validator("optimizer")
    @classmethod
    def known_optimizer(cls, v: str) -> str:
        v = v.lower()
        if v not in ("nadam", "adam"):
            raise ValueError(f"optimizer must be 'nadam' or 'adam', got {v!r}")
        return v

    class Config:
        json_schema_extra = {
            "example": {
                "epochs": 20,
                "batch_size": 25,
                "learning_rate": 0.05,
                "lambdas": {1: 60.0},
                "seed": 7,
                "optimizer": "nadam",
            }
        }


class MetricsRecord(BaseModel):
    """Test metrics for one task after one epoch of one stage."""
    stage: int = Field(..., ge=1)
    epoch: int = Field(..., ge=1)
    task_id: int = Field(..., ge=1)
    accuracy: float = Field(..., ge=0.0, le=1.0)
    loss: float = Field(..., ge=0.0)
    dtheta_large_f: Optional[float] = Field(None, description="Mean |dtheta| over high-Fisher parameters")
    dtheta_small_f: Optional[float] = Field(None, description="Mean |dtheta| over low-Fisher parameters")

    def csv_row(self) -> list:
        def fmt(v: Optional[float]) -> str:
            return "" if v is None else repr(float(v))

        return [
            self.stage,
            self.epoch,
            self.task_id,
            fmt(self.accuracy),
            fmt(self.loss),
            fmt(self.dtheta_large_f),
            fmt(self.dtheta_small_f),
        ]
