from pathlib import Path
from typing import Any

from pydantic import ValidationError

from core.errors import ParameterError, ParseError
from models.run import RunConfig


def read_config_file(path: str | Path) -> dict[str, str]:
    """`key=value` per line; blank lines and `#` comments ignored, `-` in keys read as `_`."""
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"config entry without '=': {raw.strip()!r}", line=number)
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{where}: {item['msg']}")
    return "; ".join(parts)


def resolve(command: str, flags: dict[str, Any], config_path: str | Path | None = None) -> RunConfig:
    """Merge config-file entries with command-line flags (flags win) and validate."""
    merged: dict[str, Any] = read_config_file(config_path) if config_path else {}
    merged.pop("command", None)
    merged.update({key: value for key, value in flags.items() if value is not None})
    try:
        return RunConfig(command=command, **merged)
    except ValidationError as e:
        raise ParameterError(f"invalid {command} configuration: {describe_validation_error(e)}")
