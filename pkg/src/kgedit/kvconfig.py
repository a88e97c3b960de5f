"""Flat ``key = value`` config files.

All editable tables in the package (relation paraphrases, inverse relations,
extraction patterns, CLI run configs) share one line format::

    # comment
    key = value

Keys may repeat; ``read_kv_multi`` collects every value for a key in file
order. Values containing ``|`` are split into lists by the callers that want
lists (paraphrases).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ConfigError

_DATA_PACKAGE = "kgedit.data"


def _parse_lines(text: str, source: str) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        pairs.append((key, value.strip()))
    return pairs


def read_kv(path: str | Path) -> dict[str, str]:
    """Read a key-value file; later lines override earlier duplicates."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return dict(_parse_lines(text, str(path)))


def read_kv_multi(path: str | Path) -> list[tuple[str, str]]:
    """Read a key-value file keeping duplicate keys in file order."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return _parse_lines(text, str(path))


def packaged_text(name: str) -> str:
    """Return the contents of a data file shipped with the package."""
    return resources.files(_DATA_PACKAGE).joinpath(name).read_text(encoding="utf-8")


def packaged_kv_multi(name: str) -> list[tuple[str, str]]:
    return _parse_lines(packaged_text(name), f"kgedit.data/{name}")


def split_list(value: str) -> list[str]:
    """Split a ``a | b | c`` value into its items."""
    return [item.strip() for item in value.split("|") if item.strip()]
