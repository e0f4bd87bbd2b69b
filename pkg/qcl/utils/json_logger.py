"""
Structured event logging.

Three event channels sit next to the per-module loggers:

    qcl.performance   wall time of commands and long computations
    qcl.training      epoch and stage progress of continual-learning runs
    qcl.error         failures mapped to CLI exit codes, and config validation

Each event carries an ``event_type`` field so JSON logs can be filtered
without parsing messages.
"""
import logging
from datetime import datetime, timezone
from typing import Any, Dict, Mapping, Optional

from pythonjsonlogger import jsonlogger

PERFORMANCE_CHANNEL = "qcl.performance"
TRAINING_CHANNEL = "qcl.training"
ERROR_CHANNEL = "qcl.error"
EVENT_CHANNELS = (PERFORMANCE_CHANNEL, TRAINING_CHANNEL, ERROR_CHANNEL)


class CustomJsonFormatter(jsonlogger.JsonFormatter):
    """JSON records with a UTC timestamp and source location."""

    def add_fields(self, log_record: Dict, record: logging.LogRecord, message_dict: Dict):
        super().add_fields(log_record, record, message_dict)
        log_record["timestamp"] = datetime.fromtimestamp(record.created, timezone.utc).isoformat()
        log_record["level"] = record.levelname
        log_record["logger"] = record.name
        log_record["where"] = f"{record.module}:{record.funcName}:{record.lineno}"
        if record.threadName != "MainThread":
            log_record["thread"] = record.threadName


def _rounded(values: Mapping[int, float], digits: int = 4) -> Dict[str, float]:
    # JSON object keys must be strings
    return {str(k): round(float(v), digits) for k, v in values.items()}


class PerformanceLogger:
    """Timing events."""

    @staticmethod
    def log_operation(
        operation: str,
        duration_ms: float,
        success: bool,
        metadata: Optional[Dict] = None,
    ):
        logging.getLogger(PERFORMANCE_CHANNEL).info(
            f"{operation} took {duration_ms / 1000:.2f}s",
            extra={
                "event_type": "performance",
                "operation": operation,
                "duration_ms": round(duration_ms, 2),
                "success": success,
                "metadata": metadata or {},
            },
        )


class TrainingLogger:
    """Continual-learning progress: one event per epoch, one per finished stage."""

    @staticmethod
    def log_epoch(
        stage: int,
        epoch: int,
        accuracies: Mapping[int, float],
        losses: Mapping[int, float],
    ):
        logging.getLogger(TRAINING_CHANNEL).debug(
            f"stage {stage} epoch {epoch}: "
            + " ".join(f"T{k}={v:.3f}" for k, v in accuracies.items()),
            extra={
                "event_type": "epoch",
                "stage": stage,
                "epoch": epoch,
                "accuracies": _rounded(accuracies),
                "losses": _rounded(losses),
            },
        )

    @staticmethod
    def log_stage(
        stage: int,
        epochs: int,
        final_accuracies: Mapping[int, float],
        fisher_above_threshold: int,
        n_params: int,
        duration_ms: float,
    ):
        """Stage summary; ``fisher_above_threshold`` counts the large-Fisher parameters."""
        logging.getLogger(TRAINING_CHANNEL).info(
            f"stage {stage} done after {epochs} epochs, "
            f"{fisher_above_threshold}/{n_params} parameters above the Fisher threshold",
            extra={
                "event_type": "stage",
                "stage": stage,
                "epochs": epochs,
                "final_accuracies": _rounded(final_accuracies),
                "fisher_above_threshold": fisher_above_threshold,
                "n_params": n_params,
                "duration_ms": round(duration_ms, 2),
            },
        )


class ErrorLogger:
    @staticmethod
    def log_error(error: BaseException, context: Optional[Dict] = None, exit_code: Optional[int] = None):
        logger = logging.getLogger(ERROR_CHANNEL)
        logger.error(
            f"{type(error).__name__}: {error}",
            extra={
                "event_type": "error",
                "error_type": type(error).__name__,
                "error_message": str(error),
                "exit_code": exit_code,
                "context": context or {},
            },
            exc_info=logger.isEnabledFor(logging.DEBUG),
        )

    @staticmethod
    def log_validation_error(field: str, message: str, value: Any = None):
        """One rejected experiment-file field."""
        logging.getLogger(ERROR_CHANNEL).warning(
            f"invalid {field}: {message}",
            extra={
                "event_type": "validation_error",
                "field": field,
                "reason": message,
                "value": None if value is None else str(value),
            },
        )


performance_logger = PerformanceLogger()
training_logger = TrainingLogger()
error_logger = ErrorLogger()
