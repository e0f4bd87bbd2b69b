"""
Logging setup for the ``qcl`` command line and library.

Every record goes to standard error: the ``train --stdout-csv`` mode owns
standard out. ``log_function_call`` wraps the CLI command bodies and reports
their wall time through the performance channel.
"""
import functools
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Optional, TypeVar

from qcl.core.config import settings
from qcl.core.exceptions import ConfigException
from qcl.utils.json_logger import EVENT_CHANNELS, CustomJsonFormatter, performance_logger

F = TypeVar("F", bound=Callable)

PLAIN_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
JSON_FIELDS = "%(timestamp)s %(level)s %(name)s %(message)s"

# libraries that log at INFO/DEBUG on import or per call
QUIET_LIBRARIES = ("PIL", "numexpr")


def _formatter(log_format: str) -> logging.Formatter:
    fmt = log_format.lower()
    if fmt == "json":
        return CustomJsonFormatter(JSON_FIELDS)
    if fmt == "plain":
        return logging.Formatter(PLAIN_FORMAT, datefmt="%H:%M:%S")
    raise ConfigException(f"log format must be 'json' or 'plain', got {log_format!r}")


def setup_logging(
    log_level: Optional[str] = None,
    log_format: Optional[str] = None,
    log_file: Optional[str] = None,
) -> None:
    """
    Configure the root logger; safe to call more than once (handlers are replaced).

    Args:
        log_level: DEBUG, INFO, WARNING or ERROR; default ``settings.LOG_LEVEL``
        log_format: "json" or "plain"; default ``settings.LOG_FORMAT``
        log_file: extra file sink; default ``settings.LOG_FILE`` (empty means none)
    """
    level_name = (log_level or settings.LOG_LEVEL).upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.INFO
    formatter = _formatter(log_format or settings.LOG_FORMAT)

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(level)

    sinks: list = [logging.StreamHandler(sys.stderr)]
    log_file = log_file if log_file is not None else settings.LOG_FILE
    if log_file:
        path = Path(log_file)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            sinks.append(logging.FileHandler(path))
        except OSError as e:
            # a missing log file must not stop a run
            sys.stderr.write(f"log file {path} unavailable: {e}\n")
    for sink in sinks:
        sink.setFormatter(formatter)
        root.addHandler(sink)

    for channel in EVENT_CHANNELS:
        logging.getLogger(channel).setLevel(level)
    for name in QUIET_LIBRARIES:
        logging.getLogger(name).setLevel(logging.WARNING)

    root.debug(f"Logging at {level_name} to {len(sinks)} sink(s)")


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def log_function_call(func: F) -> F:
    """
    Decorator for CLI command bodies.

    Logs entry at DEBUG, then one performance event with the duration and
    whether the command raised. Exceptions propagate unchanged.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = logging.getLogger(func.__module__)
        logger.debug(f"{func.__name__} started", extra={"function_name": func.__name__})
        started = time.perf_counter()
        success = False
        try:
            result = func(*args, **kwargs)
            success = True
            return result
        finally:
            performance_logger.log_operation(
                func.__name__,
                (time.perf_counter() - started) * 1000,
                success=success,
            )

    return wrapper  # type: ignore[return-value]
