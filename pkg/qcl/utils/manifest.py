"""Run manifests: enough provenance to repeat a run bit-exactly."""
import hashlib
import json
import logging
import platform
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from qcl import __version__
from qcl.core.exceptions import DataIOException

logger = logging.getLogger(__name__)

TRACKED_PACKAGES = ("numpy", "scipy", "pydantic", "pydantic-settings", "pillow", "tenacity")


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def library_versions() -> Dict[str, Optional[str]]:
    versions: Dict[str, Optional[str]] = {}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunManifest:
    """Collects provenance for one command and writes it as ``manifest.json``."""

    def __init__(self, command: str, argv: List[str], config_text: str, seed: int):
        self.payload: Dict[str, Any] = {
            "command": command,
            "argv": list(argv),
            "config_sha256": sha256_text(config_text),
            "seed": seed,
            "qcl_version": __version__,
            "python": sys.version.split()[0],
            "platform": platform.platform(),
            "libraries": library_versions(),
            "started_at": utc_now(),
        }

    def update(self, **fields: Any) -> "RunManifest":
        self.payload.update(fields)
        return self

    def write(self, directory: Union[str, Path], success: bool = True) -> Path:
        self.payload["finished_at"] = utc_now()
        self.payload["success"] = success
        path = Path(directory) / "manifest.json"
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(self.payload, indent=2, sort_keys=True, default=str))
        except OSError as e:
            raise DataIOException(f"cannot write run manifest {path}: {e}")
        logger.info(f"Run manifest written to {path}")
        return path
