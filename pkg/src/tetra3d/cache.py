"""On-disk persistence of the exact memo tables (Q-polynomials and R-elements)."""

from __future__ import annotations

import json
import os
from pathlib import Path

from . import rmatrix
from .qpoly import LaurentPoly

ENV_VAR = "TETRA3D_CACHE_DIR"
FILENAME = "memo-v1.json"


def cache_dir() -> Path | None:
    raw = os.environ.get(ENV_VAR)
    return Path(raw) if raw else None


def _key(t) -> str:
    return ",".join(str(x) for x in t)


def _unkey(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(","))


def load(directory: Path | None = None) -> int:
    """Merge a saved table into memory; returns the number of entries read."""
    directory = directory or cache_dir()
    if directory is None:
        return 0
    path = Path(directory) / FILENAME
    if not path.exists():
        return 0
    data = json.loads(path.read_text())
    for k, v in data.get("Q", {}).items():
        rmatrix.Q_MEMO.setdefault(_unkey(k), LaurentPoly.from_json(v))
    for k, v in data.get("R", {}).items():
        rmatrix.R_MEMO.setdefault(_unkey(k), LaurentPoly.from_json(v))
    return len(data.get("Q", {})) + len(data.get("R", {}))


def save(directory: Path | None = None) -> Path | None:
    directory = directory or cache_dir()
    if directory is None:
        return None
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = {
        "Q": {_key(k): v.to_json() for k, v in sorted(rmatrix.Q_MEMO.items())},
        "R": {_key(k): v.to_json() for k, v in sorted(rmatrix.R_MEMO.items())},
    }
    path = directory / FILENAME
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(data, sort_keys=True))
    tmp.replace(path)
    return path
