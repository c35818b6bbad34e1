"""Run manifests: what produced an output directory, from which inputs."""

from __future__ import annotations

import datetime as dt
import hashlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..data.dataset_base import read_json, write_json
from ..src.errors import DataIOError
from ..src.logging_utils import get_logger, log

logger = get_logger(__name__)

MANIFEST_FILE = "manifest.json"


def blob_hash(data: bytes) -> str:
    """Content hash in the form `git hash-object` prints."""
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def hash_inputs(paths: Sequence[Path]) -> Dict[str, str]:
    """Blob hash of every input file; directories contribute each file they hold."""
    out: Dict[str, str] = {}
    for p in map(Path, paths):
        files = sorted(f for f in p.rglob("*") if f.is_file()) if p.is_dir() else [p]
        for f in files:
            if f.name == MANIFEST_FILE:
                continue
            try:
                out[str(f)] = blob_hash(f.read_bytes())
            except OSError as err:
                raise DataIOError(f"cannot hash input '{f}': {err}") from err
    return out


@dataclass(frozen=True)
class RunManifest:
    command: str
    argv: List[str]
    config_path: Optional[str]
    seed: Optional[int]
    inputs: Dict[str, str]
    output: str
    config: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)
    timestamp: str = field(
        default_factory=lambda: dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()
    )

    def write(self) -> Path:
        path = Path(self.output) / MANIFEST_FILE
        write_json(path, asdict(self))
        log(logger, 20, "manifest_written", path=str(path), inputs=len(self.inputs))
        return path

    @classmethod
    def read(cls, directory) -> "RunManifest":
        rec = read_json(Path(directory) / MANIFEST_FILE)
        try:
            return cls(**rec)
        except TypeError as err:
            raise DataIOError(f"malformed manifest in '{directory}': {err}") from err
