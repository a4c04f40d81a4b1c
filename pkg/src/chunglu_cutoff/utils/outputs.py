"""
Result files and run manifests.

Every writer returns an OutputRecord with the file's SHA-256 so commands can
list what they produced in ``manifest.json``.
"""

import hashlib
import json
import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd
from loguru import logger
from pydantic import BaseModel

from .. import __version__
from ..data.models import ExperimentConfig, OutputRecord, RunManifest

FLOAT_FORMAT = "%.9g"
MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def record_file(path: PathLike, root: Optional[PathLike] = None) -> OutputRecord:
    """Hash an existing file; the stored path is relative to ``root`` when given."""
    path = Path(path)
    shown = path.relative_to(root) if root else path
    return OutputRecord(path=shown.as_posix(), sha256=sha256_file(path), size=path.stat().st_size)


class OutputWriter:
    """Writes the files of one run under ``out_dir`` and keeps their records."""

    def __init__(self, out_dir: PathLike):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.records: List[OutputRecord] = []

    def _target(self, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def add(self, path: PathLike) -> OutputRecord:
        """Register a file some other writer produced."""
        record = record_file(path, self.out_dir)
        self.records.append(record)
        logger.debug(f"Output {record.path} ({record.size} bytes)")
        return record

    def csv(self, name: str, frame: Union[pd.DataFrame, Sequence[Dict[str, Any]]],
            columns: Optional[List[str]] = None) -> Path:
        if not isinstance(frame, pd.DataFrame):
            frame = pd.DataFrame(list(frame), columns=columns)
        elif columns is not None:
            frame = frame[columns]
        path = self._target(name)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self.add(path)
        return path

    def json(self, name: str, payload: Union[BaseModel, Dict[str, Any], List[Any]]) -> Path:
        path = self._target(name)
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2)
        else:
            text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
        path.write_text(text + "\n", encoding="utf-8")
        self.add(path)
        return path

    def jsonl(self, name: str, rows: Iterable[Dict[str, Any]]) -> Path:
        path = self._target(name)
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, sort_keys=True, default=_jsonable) + "\n")
        self.add(path)
        return path

    def path(self, name: str) -> Path:
        """A target path for writers that produce the file themselves."""
        return self._target(name)

    def manifest(
        self,
        config: ExperimentConfig,
        replica_seeds: Sequence[int] = (),
        started: Optional[float] = None,
        extra: Optional[Dict[str, Any]] = None,
    ) -> RunManifest:
        """Write ``manifest.json`` listing every recorded output."""
        manifest = RunManifest(
            experiment=config.experiment,
            config_digest=config.digest(),
            code_version=__version__,
            seed=config.seed,
            replica_seeds=list(replica_seeds),
            wall_clock_seconds=time.perf_counter() - started if started is not None else 0.0,
            outputs=list(self.records),
            extra=extra or {},
        )
        path = self._target(MANIFEST_NAME)
        path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info(f"Manifest written to {path} ({len(self.records)} outputs)")
        return manifest


def verify_manifest(out_dir: PathLike) -> List[str]:
    """Paths whose current hash differs from the manifest entry."""
    out_dir = Path(out_dir)
    manifest = RunManifest.model_validate_json((out_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    return [
        rec.path for rec in manifest.outputs
        if not (out_dir / rec.path).exists() or sha256_file(out_dir / rec.path) != rec.sha256
    ]


def _jsonable(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    raise TypeError(f"cannot serialise {type(value).__name__}")
