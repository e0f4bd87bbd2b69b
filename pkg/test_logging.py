"""
Tests for env-file settings, logging setup, event loggers and exception exit codes.
"""
import json
import logging

import pytest

from qcl.core.config import Settings
from qcl.core.exceptions import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_UNEXPECTED,
    CheckpointFormatException,
    ConfigException,
    ConvergenceException,
    StructuralException,
    exit_code_for,
    handle_cli_exception,
)
from qcl.utils.json_logger import training_logger
from qcl.utils.logger import log_function_call, setup_logging


@pytest.fixture(autouse=True)
def restore_root_logger():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_settings_read_env_file(tmp_path, monkeypatch):
    monkeypatch.delenv("FISHER_THRESHOLD", raising=False)
    monkeypatch.delenv("VQE_GRADIENT_METHOD", raising=False)
    env = tmp_path / ".env"
    env.write_text("FISHER_THRESHOLD=0.25\nVQE_GRADIENT_METHOD=parameter_shift\n")
    loaded = Settings(_env_file=env)
    assert loaded.FISHER_THRESHOLD == 0.25
    assert loaded.VQE_GRADIENT_METHOD == "parameter_shift"
    assert Settings(_env_file=None).VQE_GRADIENT_METHOD == "adjoint"


def test_json_logs_go_to_stderr(capsys):
    setup_logging(log_level="INFO", log_format="json", log_file="")
    training_logger.log_stage(
        stage=2, epochs=5, final_accuracies={1: 0.91234, 2: 0.5},
        fisher_above_threshold=3, n_params=27, duration_ms=12.345,
    )
    captured = capsys.readouterr()
    assert captured.out == ""
    record = json_lines(captured.err)[-1]
    assert record["event_type"] == "stage"
    assert record["final_accuracies"] == {"1": 0.9123, "2": 0.5}
    assert record["level"] == "INFO"
    assert record["logger"] == "qcl.training"


def test_epoch_events_only_at_debug(capsys):
    setup_logging(log_level="INFO", log_format="json", log_file="")
    training_logger.log_epoch(1, 1, {1: 0.5}, {1: 0.7})
    assert capsys.readouterr().err == ""

    setup_logging(log_level="DEBUG", log_format="json", log_file="")
    training_logger.log_epoch(1, 1, {1: 0.5}, {1: 0.7})
    assert json_lines(capsys.readouterr().err)[-1]["event_type"] == "epoch"


def test_plain_format_and_log_file(tmp_path, capsys):
    log_file = tmp_path / "logs" / "run.log"
    setup_logging(log_level="WARNING", log_format="plain", log_file=str(log_file))
    logging.getLogger("qcl.test").warning("fisher mostly zero")
    assert "fisher mostly zero" in capsys.readouterr().err
    assert "fisher mostly zero" in log_file.read_text()


def test_unknown_log_format():
    with pytest.raises(ConfigException):
        setup_logging(log_format="xml")


def test_exception_prefix_and_details():
    e = StructuralException("stage 3 missing", details={"stage": 3})
    assert str(e) == "Structural error: stage 3 missing"
    assert e.details == {"stage": 3}
    assert e.exit_code == EXIT_CONFIG


@pytest.mark.parametrize(
    "exc, code",
    [
        (ConfigException("x"), EXIT_CONFIG),
        (ConvergenceException("x"), EXIT_NUMERIC),
        (CheckpointFormatException("x"), EXIT_IO),
        (FileNotFoundError("x"), EXIT_IO),
        (RuntimeError("x"), EXIT_UNEXPECTED),
    ],
)
def test_exit_codes(exc, code, capsys):
    setup_logging(log_level="ERROR", log_format="json", log_file="")
    assert exit_code_for(exc) == code
    assert handle_cli_exception(exc) == code
    record = json_lines(capsys.readouterr().err)[-1]
    assert record["exit_code"] == code
    assert record["error_type"] == type(exc).__name__


def test_log_function_call_reports_failure(capsys):
    @log_function_call
    def explode():
        raise ConvergenceException("energy stuck")

    setup_logging(log_level="INFO", log_format="json", log_file="")
    with pytest.raises(ConvergenceException):
        explode()
    record = json_lines(capsys.readouterr().err)[-1]
    assert record["operation"] == "explode"
    assert record["success"] is False
