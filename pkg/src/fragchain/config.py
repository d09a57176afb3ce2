"""Run-file parsing.

Config files are INI-style text with one value per line.  Every physical
quantity carries an explicit unit suffix and is rejected otherwise:
frequencies in MHz (stored as angular rad/us), times in us, lengths in um,
and the van der Waals coefficient in MHz*um^6.  Errors carry the offending
line number.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .units import from_mhz

__all__ = ["ConfigError", "ParsedConfig", "parse_config", "parse_config_text"]


class ConfigError(ValueError):
    """A config file failed validation; carries a line-anchored message."""

    def __init__(self, message, path="<config>", line=None):
        self.path = path
        self.line = line
        anchor = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(anchor + message)


@dataclass(frozen=True)
class ParsedConfig:
    """Validated key-value view of a run file.

    Two configs compare equal iff their parsed section/key/value structures
    match, which is the round-trip contract for manifests.
    """

    sections: dict
    text: str = field(compare=False)
    path: str = field(default="<config>", compare=False)

    def _line_of(self, key: str) -> int | None:
        for i, line in enumerate(self.text.splitlines(), start=1):
            stripped = line.strip()
            if stripped.startswith(key) and "=" in stripped:
                lhs = stripped.split("=", 1)[0].strip()
                if lhs == key:
                    return i
        return None

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, self.path, self._line_of(key))

    def has(self, section: str, key: str) -> bool:
        return section in self.sections and key in self.sections[section]

    def raw(self, section: str, key: str, default=None, required: bool = False):
        if not self.has(section, key):
            if required:
                raise ConfigError(f"missing required key [{section}] {key}", self.path)
            return default
        return self.sections[section][key]

    def _unit_value(self, section, key, unit, default, required, scale=1.0):
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        parts = raw.split()
        if len(parts) != 2 or parts[1] != unit:
            raise self.error(key, f"expected '<number> {unit}', got {raw!r}")
        try:
            value = float(parts[0])
        except ValueError:
            raise self.error(key, f"not a number: {parts[0]!r}") from None
        return value * scale

    def frequency(self, section, key, default=None, required=False):
        """A 'x MHz' entry, returned as angular frequency in rad/us."""
        return self._unit_value(section, key, "MHz", default, required, scale=from_mhz(1.0))

    def time(self, section, key, default=None, required=False):
        return self._unit_value(section, key, "us", default, required)

    def length(self, section, key, default=None, required=False):
        return self._unit_value(section, key, "um", default, required)

    def c6(self, section, key, default=None, required=False):
        """A 'x MHz*um^6' entry, returned in rad/us * um^6."""
        return self._unit_value(section, key, "MHz*um^6", default, required, scale=from_mhz(1.0))

    def number(self, section, key, default=None, required=False):
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise self.error(key, f"not a dimensionless number: {raw!r}") from None

    def integer(self, section, key, default=None, required=False):
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise self.error(key, f"not an integer: {raw!r}") from None

    def string(self, section, key, default=None, required=False, choices=None):
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        if choices and raw not in choices:
            raise self.error(key, f"must be one of {sorted(choices)}, got {raw!r}")
        return raw

    def boolean(self, section, key, default=False):
        raw = self.raw(section, key, None, False)
        if raw is None:
            return default
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise self.error(key, f"not a boolean: {raw!r}")

    def numbers(self, section, key, default=None, required=False):
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            return tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise self.error(key, f"not a comma-separated number list: {raw!r}") from None

    def integers(self, section, key, default=None, required=False):
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            return tuple(int(x) for x in raw.split(","))
        except ValueError:
            raise self.error(key, f"not a comma-separated integer list: {raw!r}") from None

    def with_override(self, section: str, key: str, value: str) -> "ParsedConfig":
        sections = {s: dict(kv) for s, kv in self.sections.items()}
        sections.setdefault(section, {})[key] = value
        return ParsedConfig(sections, self.text, self.path)


def parse_config_text(text: str, path: str = "<config>") -> ParsedConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc.message if hasattr(exc, "message") else exc), path, line) from None
    sections = {name: dict(parser[name]) for name in parser.sections()}
    return ParsedConfig(sections, text, path)


def parse_config(path) -> ParsedConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, str(path))
