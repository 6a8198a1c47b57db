"""``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Each command declares its keys
with a converter and a default; any other key is an error.
"""

from __future__ import annotations

from typing import Any, Callable, Dict, Mapping, Optional, Tuple


class ConfigError(ValueError):
    pass


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def read_config(path) -> Dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read(), str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def as_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def as_list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


Schema = Mapping[str, Tuple[Callable[[str], Any], Any]]


def apply_schema(raw: Mapping[str, str], schema: Schema, prefixes: Tuple[str, ...] = ()) -> Dict[str, Any]:
    """Convert ``raw`` against ``schema``; keys under ``prefixes`` pass through as strings."""
    out: Dict[str, Any] = {key: default for key, (_, default) in schema.items()}
    for key, value in raw.items():
        if key in schema:
            convert = schema[key][0]
            try:
                out[key] = convert(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
        elif any(key.startswith(p) for p in prefixes):
            out[key] = value
        else:
            known = ", ".join(sorted(schema))
            raise ConfigError(f"unknown config key {key!r}; known keys: {known}")
    return out


def load(path: Optional[str], schema: Schema, prefixes: Tuple[str, ...] = ()) -> Dict[str, Any]:
    raw = read_config(path) if path else {}
    return apply_schema(raw, schema, prefixes)
