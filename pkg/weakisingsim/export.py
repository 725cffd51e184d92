"""Result files: CSV tables, JSON documents and run manifests.

Outputs are write-once: writing onto an existing path raises ConfigError.
Floats are written with 17 significant digits so tables round-trip exactly.
"""

import csv
import hashlib
import json
from datetime import datetime
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonlines
import numpy as np

from weakisingsim.errors import ConfigError

MANIFEST_NAME = "manifest.json"


def format_value(value: Any) -> str:
    """Format one CSV cell; floats as 17 significant digits, '.' decimal."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def ensure_new(path: Path) -> Path:
    path = Path(path)
    if path.exists():
        raise ConfigError(f"Refusing to overwrite existing output: {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV table with a header row and minimal quoting."""
    path = ensure_new(path)
    with open(path, "x", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, [row for row in reader]


def _to_jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, data: Any) -> Path:
    path = ensure_new(path)
    with open(path, "x", encoding="utf-8") as f:
        json.dump(_to_jsonable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_jsonl(path: Path, items: Iterable[Any]) -> Path:
    """One JSON object per line (trajectory records)."""
    path = ensure_new(path)
    with jsonlines.open(path, mode="w", sort_keys=True) as writer:
        for item in items:
            writer.write(_to_jsonable(item))
    return path


def read_json(path: Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_version() -> str:
    try:
        return metadata.version("weakisingsim")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def write_manifest(
    out_dir: Path, command: str, config: dict, outputs: Sequence[Path]
) -> Path:
    """Write manifest.json echoing the resolved config and hashing every output."""
    out_dir = Path(out_dir)
    files = []
    for p in outputs:
        p = Path(p)
        files.append({"path": p.name, "sha256": sha256_file(p)})
    manifest = {
        "command": command,
        "config": config,
        "version": package_version(),
        "created": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
        "outputs": files,
    }
    return write_json(out_dir / MANIFEST_NAME, manifest)


def read_manifest(path: Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise ConfigError(f"Manifest not found: {path}")
    data = read_json(path)
    for key in ("command", "config"):
        if key not in data:
            raise ConfigError(f"Manifest {path} lacks '{key}'")
    return data
