"""Flat key=value config files and per-field provenance (default | file | flag)."""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any

from dream.errors import ConfigError

SOURCES = ("default", "file", "flag")


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines. ``#`` starts a comment; dashes in keys become underscores."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(value: Any, kind: type, key: str):
    if isinstance(value, kind) and not (kind is int and isinstance(value, bool)):
        return value
    try:
        if kind is bool:
            if isinstance(value, str):
                low = value.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


class ResolvedConfig:
    """Values plus the source each one came from."""

    def __init__(self) -> None:
        self.values: dict[str, Any] = {}
        self.sources: dict[str, str] = {}

    def set(self, key: str, value: Any, source: str) -> None:
        assert source in SOURCES
        self.values[key] = value
        self.sources[key] = source

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def to_json(self) -> dict:
        return {k: {"value": self.values[k], "source": self.sources[k]} for k in sorted(self.values)}

    def build(self, cls, prefix: str = ""):
        """Instantiate dataclass ``cls`` from keys named ``prefix + field``."""
        kwargs = {}
        for f in dataclasses.fields(cls):
            key = prefix + f.name
            if key in self.values:
                kwargs[f.name] = self.values[key]
        return cls(**kwargs)


def resolve(
    schema: dict[str, tuple[type, Any]],
    file_values: dict[str, str] | None,
    flag_values: dict[str, Any],
    extra: dict[str, Any] | None = None,
) -> ResolvedConfig:
    """Layer defaults < file < flags over ``schema`` (key -> (type, default)).

    ``flag_values`` entries that are None count as "not given". Keys in
    ``extra`` (paths, command name) are recorded as flags verbatim.
    """
    file_values = file_values or {}
    unknown = sorted(set(file_values) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    rc = ResolvedConfig()
    for key, (kind, default) in schema.items():
        if flag_values.get(key) is not None:
            rc.set(key, _coerce(flag_values[key], kind, key), "flag")
        elif key in file_values:
            rc.set(key, _coerce(file_values[key], kind, key), "file")
        else:
            rc.set(key, default, "default")
    for key, value in (extra or {}).items():
        rc.set(key, value, "flag")
    return rc


def schema_from(cls, prefix: str = "", skip: tuple[str, ...] = ()) -> dict[str, tuple[type, Any]]:
    hints = {"int": int, "float": float, "str": str, "bool": bool}
    out = {}
    for f in dataclasses.fields(cls):
        if f.name in skip:
            continue
        kind = hints[f.type] if isinstance(f.type, str) else f.type
        out[prefix + f.name] = (kind, f.default)
    return out
