"""Deterministic CSV/JSON writers, run manifests and the flat config format."""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__


def _plain(obj):
    """Convert numpy scalars/arrays so json can encode them; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_plain(payload), indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Comma-separated, one header row, shortest round-trip float repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    return header, np.array(data)


def manifest(command: str, params: dict, wall_time: float, extra: dict | None = None) -> dict:
    out = {
        "command": command,
        "version": __version__,
        "parameters": params,
        "wall_time_s": wall_time,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    if extra:
        out.update(extra)
    return out


class ConfigError(ValueError):
    pass


def read_config(path: Path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use - or _ interchangeably."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw!r}")
        key = key.strip().replace("-", "_")
        if key in out:
            raise ConfigError(f"{path}:{n}: duplicate key {key!r}")
        out[key] = value.strip()
    return out
