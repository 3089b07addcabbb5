"""Flat ``key = value`` experiment configs with typed, line-cited access.

The format is INI-style: ``[section]`` headers, one flat ``key = value``
per line, ``#``/``;`` comments, no nesting and no interpolation.  Parsing
is delegated to :mod:`configparser`; this module adds what the runner
needs on top: a content digest (stamped into every output file), a map
from each key to the line it was defined on (so type errors cite their
line), and typed getters that fail loudly with those line numbers.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field as dataclass_field

from .errors import ConfigError

_MISSING = object()

_SECTION_RE = re.compile(r"^\s*\[(?P<name>[^]]+)\]\s*(?:[#;].*)?$")
_KEY_RE = re.compile(r"^\s*(?P<key>[^=\s#;][^=]*?)\s*=")


@dataclass
class ExperimentConfig:
    """Parsed config: raw text, sha256 digest, and typed key access."""

    raw: str
    digest: str
    _values: dict = dataclass_field(default_factory=dict)
    _lines: dict = dataclass_field(default_factory=dict)

    # -- raw access ---------------------------------------------------------

    def has(self, section: str, key: str) -> bool:
        return (section, key) in self._values

    def has_section(self, section: str) -> bool:
        return any(s == section for s, _ in self._values)

    def keys(self, section: str) -> list[str]:
        return [k for s, k in self._values if s == section]

    def line_of(self, section: str, key: str):
        return self._lines.get((section, key))

    # -- typed getters ------------------------------------------------------

    def _raw(self, section: str, key: str, default):
        if (section, key) in self._values:
            return self._values[(section, key)]
        if default is _MISSING:
            raise ConfigError(f"missing required key '{key}' in section [{section}]")
        return default

    def get_str(self, section: str, key: str, default=_MISSING) -> str:
        val = self._raw(section, key, default)
        return val if isinstance(val, str) else val

    def _convert(self, section: str, key: str, raw: str, kind: str, fn):
        try:
            return fn(raw)
        except (ValueError, TypeError):
            raise ConfigError(
                f"[{section}] {key} = {raw!r} is not {kind}",
                lineno=self.line_of(section, key),
            ) from None

    def get_float(self, section: str, key: str, default=_MISSING) -> float:
        raw = self._raw(section, key, default)
        if not isinstance(raw, str):
            return raw
        return self._convert(section, key, raw, "a number", float)

    def get_int(self, section: str, key: str, default=_MISSING) -> int:
        raw = self._raw(section, key, default)
        if not isinstance(raw, str):
            return raw

        def as_int(s):
            v = int(s, 0) if s.strip().lower().startswith("0x") else int(s)
            return v

        return self._convert(section, key, raw, "an integer", as_int)

    def get_bool(self, section: str, key: str, default=_MISSING) -> bool:
        raw = self._raw(section, key, default)
        if not isinstance(raw, str):
            return raw
        lowered = raw.strip().lower()
        table = {
            "true": True,
            "yes": True,
            "on": True,
            "1": True,
            "false": False,
            "no": False,
            "off": False,
            "0": False,
        }
        if lowered not in table:
            raise ConfigError(
                f"[{section}] {key} = {raw!r} is not a boolean",
                lineno=self.line_of(section, key),
            )
        return table[lowered]

    def get_floats(self, section: str, key: str, default=_MISSING) -> tuple:
        raw = self._raw(section, key, default)
        if not isinstance(raw, str):
            return raw
        return self._convert(
            section,
            key,
            raw,
            "a comma-separated list of numbers",
            lambda s: tuple(float(part) for part in s.split(",")),
        )

    def get_ints(self, section: str, key: str, default=_MISSING) -> tuple:
        raw = self._raw(section, key, default)
        if not isinstance(raw, str):
            return raw
        return self._convert(
            section,
            key,
            raw,
            "a comma-separated list of integers",
            lambda s: tuple(int(part) for part in s.split(",")),
        )


def _key_lines(text: str) -> dict:
    """Map ``(section, key) -> 1-based line number`` of each definition."""
    lines = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group("name").strip()
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            key = m.group("key").strip()
            lines.setdefault((section, key), lineno)
    return lines


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat INI text; every syntax error cites its line number."""
    parser = configparser.ConfigParser(
        interpolation=None,
        inline_comment_prefixes=("#", ";"),
        delimiters=("=",),
        strict=True,
    )
    parser.optionxform = str  # keys are case-sensitive (K1 is not k1)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(
            "every key needs a [section] header above it", lineno=exc.lineno
        ) from None
    except (
        configparser.DuplicateOptionError,
        configparser.DuplicateSectionError,
    ) as exc:
        raise ConfigError(str(exc.message), lineno=exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("unparseable line", lineno=lineno) from None
    except configparser.Error as exc:  # pragma: no cover - catch-all
        raise ConfigError(str(exc)) from None

    values = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            values[(section, key)] = value
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return ExperimentConfig(
        raw=text, digest=digest, _values=values, _lines=_key_lines(text)
    )
