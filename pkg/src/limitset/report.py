"""Structured run reports: deterministic JSON on disk."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import SpecError


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)


def write_report(path, report: dict) -> None:
    Path(path).write_text(dumps(report), encoding="utf-8", newline="\n")


def read_report(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e.strerror}", stage="io") from None
    try:
        return loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"malformed report: {e.msg}", stage="report", line=e.lineno,
                        column=e.colno) from None


def as_float(v) -> float:
    """Inverse of the non-finite encoding used in reports."""
    return float(v)
