"""Network description language: parser, validator and TDMA scheduler."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .errors import AndlError, AndlSyntaxError, AndlValidationError, Diagnostic, Infeasible, LcmOverflow
from .model import NetworkModel
from .parser import parse
from .render import render
from .schedule import ScheduleResult, format_schedule, generate_tt_schedule
from .validate import OVERRIDE_KEYS, validate


def load(path, overrides: Optional[dict] = None) -> NetworkModel:
    """Parse and validate a file; diagnostics carry the file name."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        return validate(parse(text), overrides)
    except AndlError as exc:
        raise exc.with_source(str(path))


def loads(text: str, overrides: Optional[dict] = None) -> NetworkModel:
    return validate(parse(text), overrides)


__all__ = [
    "AndlError", "AndlSyntaxError", "AndlValidationError", "Diagnostic", "Infeasible",
    "LcmOverflow", "NetworkModel", "OVERRIDE_KEYS", "ScheduleResult", "format_schedule",
    "generate_tt_schedule", "load", "loads", "parse", "render", "validate",
]
