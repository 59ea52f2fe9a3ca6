"""Shared helpers for reading the JSON input formats."""

from __future__ import annotations

import json
import math
from typing import IO, Any, Union

from compsel.errors import ParseError

FORMAT_VERSION = "1"

Source = Union[bytes, str, IO[bytes], IO[str]]


def read_text(source: Source) -> str:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    return source


def read_json(source: Source) -> Any:
    text = read_text(source)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None


def check_version(obj: dict) -> None:
    """Reject any ``format_version`` other than the current one (absent means current)."""
    version = obj.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION!r})")


def is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def as_finite(value: Any, what: str) -> float:
    if not is_number(value):
        raise ParseError(f"{what} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {value!r}")
    return value


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
