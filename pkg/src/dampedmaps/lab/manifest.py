"""Run manifests, artifact writers and the content-addressed result cache."""

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from qibo.config import log

from dampedmaps.config import RNG_ALGORITHM

STATUS_OK = "OK"
STATUS_CACHED = "CACHED"
STATUS_FAILED = "FAILED"


def to_builtin(value):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats mapped to ``None``."""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: Path, document) -> Path:
    text = json.dumps(to_builtin(document), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path: Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    """RFC-4180 table; floats are written with their shortest round-trip repr."""
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path: Path) -> List[dict]:
    with open(path, encoding="utf-8", newline="") as stream:
        return list(csv.DictReader(stream))


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    artifacts: Dict[str, List[dict]] = field(default_factory=dict)
    stage_times: Dict[str, float] = field(default_factory=dict)
    stage_status: Dict[str, str] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    summary: Dict[str, object] = field(default_factory=dict)
    rng: str = RNG_ALGORITHM
    root: Optional[str] = None

    def record(self, stage: str, files: Sequence[Path], status: str, seconds: float):
        root = Path(self.root) if self.root is not None else None
        self.artifacts[stage] = [
            {
                "path": str(Path(f).relative_to(root)) if root is not None else str(f),
                "sha256": sha256_file(f),
            }
            for f in files
        ]
        self.stage_status[stage] = status
        self.stage_times[stage] = round(float(seconds), 6)

    def warn(self, message: str):
        log.warning(message)
        self.warnings.append(message)

    def verify(self) -> bool:
        """Every listed artifact exists and matches its recorded hash."""
        root = Path(self.root) if self.root is not None else Path(".")
        for entries in self.artifacts.values():
            for entry in entries:
                path = root / entry["path"]
                if not path.exists() or sha256_file(path) != entry["sha256"]:
                    return False
        return True

    def to_json(self) -> dict:
        document = asdict(self)
        document.pop("root")
        return document

    def write(self, path: Path) -> Path:
        return write_json(Path(path), self.to_json())

    @classmethod
    def load(cls, path: Path, root=None) -> "RunManifest":
        return cls(**read_json(path), root=None if root is None else str(root))


class ResultCache:
    """Stage outputs stored under ``output_dir/cache/<config-hash>/<stage>.{json,csv}``.

    A stage is served from the cache only when its JSON record exists under
    the directory keyed by the full canonical configuration hash.
    """

    def __init__(self, output_dir, config_hash: str):
        self.output_dir = Path(output_dir)
        self.config_hash = config_hash
        self.directory = self.output_dir / "cache" / config_hash
        self.directory.mkdir(parents=True, exist_ok=True)

    def json_path(self, stage: str) -> Path:
        return self.directory / f"{stage}.json"

    def csv_path(self, stage: str) -> Path:
        return self.directory / f"{stage}.csv"

    def lookup(self, stage: str) -> Optional[List[Path]]:
        record = self.json_path(stage)
        if not record.exists():
            return None
        files = [record]
        if self.csv_path(stage).exists():
            files.append(self.csv_path(stage))
        return files

    def load(self, stage: str) -> dict:
        return read_json(self.json_path(stage))

    def store(self, stage: str, payload: dict, table=None) -> List[Path]:
        """Write the CSV table first so that a JSON record implies a complete stage."""
        files = []
        if table is not None:
            header, rows = table
            files.append(write_csv(self.csv_path(stage), header, rows))
        files.insert(0, write_json(self.json_path(stage), payload))
        return files

    def discard(self, stage: str):
        for path in (self.json_path(stage), self.csv_path(stage)):
            if path.exists():
                path.unlink()
