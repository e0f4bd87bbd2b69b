"""
Experiment files.

Sectioned key-value text read with configparser::

    [experiment]
    name = forgetting_10q
    seed = 7

    [model]
    qubits = 10
    blocks = 9

    [task.1]
    kind = IMAGE_128
    source = idx

    [stage.2]
    epochs = 20
    lambda.1 = 200

Values stay strings until the pydantic schemas coerce them; comma-separated
keys become lists.
"""
import configparser
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from pydantic import ValidationError

from qcl.core.exceptions import ConfigException, DataIOException
from qcl.schemas.experiment import ExperimentConfig
from qcl.utils.json_logger import error_logger

logger = logging.getLogger(__name__)

LIST_KEYS = {"classes", "rotation_order", "lambdas", "fields"}
_NUMBERED = re.compile(r"^(task|stage)\.(\d+)$")
_LAMBDA_KEY = re.compile(r"^lambda\.(\d+)$")


def _section_dict(section: configparser.SectionProxy) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in section.items():
        if key in LIST_KEYS:
            out[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            out[key] = value.strip()
    return out


def _stage_dict(section: configparser.SectionProxy) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    lambdas: Dict[str, str] = {}
    for key, value in _section_dict(section).items():
        match = _LAMBDA_KEY.match(key)
        if match:
            lambdas[match.group(1)] = value
        else:
            out[key] = value
    out["lambdas"] = lambdas
    return out


def _numbered(parser: configparser.ConfigParser, prefix: str) -> List[configparser.SectionProxy]:
    found: Dict[int, configparser.SectionProxy] = {}
    for name in parser.sections():
        match = _NUMBERED.match(name)
        if match and match.group(1) == prefix:
            found[int(match.group(2))] = parser[name]
    indices = sorted(found)
    if indices != list(range(1, len(indices) + 1)):
        raise ConfigException(f"[{prefix}.N] sections must be numbered 1..K, got {indices}")
    return [found[i] for i in indices]


def parse_experiment(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse experiment text into a validated ``ExperimentConfig``."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigException(f"{source}: {e}")

    known = {"experiment", "model", "sweep", "groundstate", "gradcheck"}
    for name in parser.sections():
        if name not in known and not _NUMBERED.match(name):
            raise ConfigException(f"{source}: unknown section [{name}]")

    raw: Dict[str, Any] = dict(_section_dict(parser["experiment"])) if parser.has_section("experiment") else {}
    for name in ("model", "sweep", "groundstate", "gradcheck"):
        if parser.has_section(name):
            raw[name] = _section_dict(parser[name])
    raw["tasks"] = [_section_dict(s) for s in _numbered(parser, "task")]
    raw["stages"] = [_stage_dict(s) for s in _numbered(parser, "stage")]

    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        errors = [
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
            for err in e.errors()
        ]
        for err in errors:
            error_logger.log_validation_error(f"{source}:{err['loc']}", err["msg"])
        raise ConfigException(
            f"{source}: {e.error_count()} invalid field(s)", details={"errors": errors}
        )
    logger.debug(f"Parsed {source}: {len(config.tasks)} tasks, {len(config.stages)} stages")
    return config


def load_experiment(path: Union[str, Path]) -> Tuple[ExperimentConfig, str]:
    """Read and parse an experiment file; returns the config and its raw text."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise DataIOException(f"cannot read config {path}: {e}")
    return parse_experiment(text, source=str(path)), text
