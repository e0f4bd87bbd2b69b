from pydantic_settings import BaseSettings
from typing import Tuple
from functools import lru_cache


class Settings(BaseSettings):
    """Laboratory settings loaded from environment variables."""

    # Simulator capacity
    MAX_QUBITS: int = 24
    EXACT_DIAG_MAX_QUBITS: int = 12
    EXACT_DIAG_EXTENDED_MAX_QUBITS: int = 14
    ALLOW_EXTENDED_DIAG: bool = False

    # Gradients
    PROBABILITY_CLAMP: float = 1e-10
    GRADIENT_METHOD: str = "parameter_shift"
    GRADCHECK_STEP: float = 1e-4
    GRADCHECK_TOLERANCE: float = 1e-6
    GRADCHECK_INSTANCES: int = 100

    # Optimizer
    NADAM_BETA1: float = 0.9
    NADAM_BETA2: float = 0.999
    NADAM_EPSILON: float = 1e-8
    DEFAULT_OPTIMIZER: str = "nadam"
    DEFAULT_LEARNING_RATE: float = 0.05
    DEFAULT_BATCH_SIZE: int = 25
    DEFAULT_EPOCHS: int = 20

    # Continual learning
    FISHER_THRESHOLD: float = 0.01
    FISHER_MODE: str = "loss_gradient"

    # Encodings
    INTERLEAVED_SCALE: float = 2.0
    FEATURE_ENCODING_T: float = 4.0
    ROTATION_ORDER: Tuple[str, str, str] = ("RX", "RZ", "RX")

    # Image pipeline
    IMAGE_SIZE: int = 16
    IMAGE_RESAMPLE: str = "bilinear"
    IMAGE_NORMALIZATION: str = "unit_norm"
    IMAGE_CLASSES: Tuple[int, int] = (0, 9)

    # Engineered quantum labels
    ENGINEERED_THRESHOLD: float = 0.2
    ENGINEERED_MAX_REDRAWS: int = 5
    ENGINEERED_TEST_FRACTION: float = 111 / 667
    PCA_COMPONENTS: int = 10

    # Cluster-Ising ground states
    VQE_BLOCKS: int = 5
    VQE_LEARNING_RATE: float = 0.05
    VQE_MAX_ITERS: int = 3000
    VQE_TOLERANCE: float = 1e-6
    VQE_WINDOW: int = 20
    # adjoint is the fast path; it returns the parameter-shift gradient to round-off
    VQE_GRADIENT_METHOD: str = "adjoint"
    SPT_H_RANGE: Tuple[float, float] = (0.0, 0.5)
    ATF_H_RANGE: Tuple[float, float] = (2.5, 3.0)

    # Execution
    DEFAULT_THREADS: int = 1
    OUTPUT_DIR: str = "./runs"
    CHECKPOINT_VERSION: int = 1
    STATE_CACHE_SIZE: int = 4096

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"
    LOG_FILE: str = ""

    class Config:
        env_file = ".env"
        case_sensitive = True


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


# Global settings instance
settings = get_settings()
