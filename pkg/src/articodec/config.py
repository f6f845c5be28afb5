"""Flat key-value config files with a typed schema and canonical dump."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError


@dataclass(frozen=True)
class ConfigField:
    name: str
    kind: str          # int | float | str | bool
    default: object
    help: str = ""


class Schema:
    def __init__(self, fields):
        self.fields = {f.name: f for f in fields}

    def defaults(self) -> dict:
        return {name: f.default for name, f in self.fields.items()}

    def _coerce(self, field: ConfigField, raw: str):
        raw = raw.strip()
        try:
            if field.kind == "int":
                return int(raw)
            if field.kind == "float":
                return float(raw)
            if field.kind == "bool":
                if raw.lower() in ("true", "1", "yes"):
                    return True
                if raw.lower() in ("false", "0", "no"):
                    return False
                raise ValueError(raw)
            return raw
        except ValueError:
            raise DataError(
                f"config key {field.name!r} expects {field.kind}, got {raw!r}"
            ) from None

    def parse(self, text: str) -> dict:
        """Parse ``key = value`` lines; unknown keys are rejected."""
        values = self.defaults()
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise DataError(f"config line {lineno}: expected key = value")
            key, raw = stripped.split("=", 1)
            key = key.strip()
            if key not in self.fields:
                raise DataError(f"config line {lineno}: unknown key {key!r}")
            values[key] = self._coerce(self.fields[key], raw)
        return values

    def dump(self, values: dict) -> str:
        """Canonical effective-config text: sorted keys, one per line."""
        lines = []
        for name in sorted(self.fields):
            value = values.get(name, self.fields[name].default)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{name} = {value}")
        return "\n".join(lines) + "\n"

    def load(self, path) -> dict:
        return self.parse(Path(path).read_text())


def config_digest(canonical_text: str) -> str:
    return hashlib.sha256(canonical_text.encode("utf-8")).hexdigest()
