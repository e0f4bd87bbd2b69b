"""
Laboratory exceptions and their command-line exit codes.

Each subclass fixes an exit code and a message prefix; ``details`` carries
machine-readable context into the error log.
"""
from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class QCLException(Exception):
    """Base exception for the laboratory."""

    exit_code: int = EXIT_UNEXPECTED
    prefix: str = ""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = f"{self.prefix}: {message}" if self.prefix else message
        self.details = details or {}
        super().__init__(self.message)


# exit code 2: the run was asked to do something impossible
class ConfigException(QCLException):
    """Invalid experiment file, stage table or command-line override."""
    exit_code = EXIT_CONFIG
    prefix = "Invalid configuration"


class StructuralException(QCLException):
    """Out-of-range indices, dimension mismatches and missing EWC history."""
    exit_code = EXIT_CONFIG
    prefix = "Structural error"


class CapacityException(QCLException):
    """Qubit count beyond the simulator or eigensolver limit."""
    exit_code = EXIT_CONFIG
    prefix = "Capacity exceeded"


class ArgumentException(QCLException):
    exit_code = EXIT_CONFIG
    prefix = "Invalid argument"


# exit code 3: numerics did not deliver
class DatasetGenerationException(QCLException):
    """A generated dataset is unusable, e.g. a label class ends up empty."""
    exit_code = EXIT_NUMERIC
    prefix = "Dataset generation failed"


class ConvergenceException(QCLException):
    exit_code = EXIT_NUMERIC
    prefix = "Convergence failure"


class GradientCheckException(QCLException):
    """Analytic gradients disagree with finite differences."""
    exit_code = EXIT_NUMERIC
    prefix = "Gradient check failed"


# exit code 4: files
class DataIOException(QCLException):
    exit_code = EXIT_IO
    prefix = "I/O failure"


class CheckpointFormatException(QCLException):
    """Corrupt checkpoint or unknown format version."""
    exit_code = EXIT_IO
    prefix = "Checkpoint format error"


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, QCLException):
        return exc.exit_code
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_UNEXPECTED


def handle_cli_exception(exc: BaseException) -> int:
    """Log an exception raised by a command and return its process exit code."""
    from qcl.utils.json_logger import error_logger

    code = exit_code_for(exc)
    context = exc.details if isinstance(exc, QCLException) else None
    error_logger.log_error(exc, context=context, exit_code=code)
    return code
