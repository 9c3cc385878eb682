import json
import math
from pathlib import Path
from typing import Any, Iterable, TextIO

import numpy as np
import pandas as pd


def metadata_lines(metadata: dict[str, Any]) -> list[str]:
    return [f"# {key}={value}" for key, value in metadata.items()]


def parse_metadata(lines: Iterable[str]) -> dict[str, str]:
    metadata: dict[str, str] = {}
    for line in lines:
        body = line.lstrip("#").strip()
        if "=" in body:
            key, value = body.split("=", 1)
            metadata[key.strip()] = value.strip()
    return metadata


def write_frame(
    frame: pd.DataFrame, path: str | Path | TextIO, metadata: dict[str, Any] | None = None
) -> None:
    """Tidy CSV with the run metadata echoed as leading `# key=value` lines."""
    if isinstance(path, (str, Path)):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            _write(frame, handle, metadata)
    else:
        _write(frame, path, metadata)


def _write(frame: pd.DataFrame, handle: TextIO, metadata: dict[str, Any] | None) -> None:
    for line in metadata_lines(metadata or {}):
        handle.write(line + "\n")
    frame.to_csv(handle, index=False, lineterminator="\n", float_format="%.17g")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(payload: dict[str, Any], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def to_jsonable(payload: Any) -> Any:
    return _jsonable(payload)
