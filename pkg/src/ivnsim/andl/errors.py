from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class Diagnostic:
    line: Optional[int]
    col: Optional[int]
    message: str
    source: str = ""

    def __str__(self) -> str:
        where = self.source or "<andl>"
        if self.line is not None:
            where += f":{self.line}:{self.col}"
        return f"{where}: error: {self.message}"


class AndlError(Exception):
    """One or more positioned diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    def with_source(self, source: str) -> "AndlError":
        self.diagnostics = [Diagnostic(d.line, d.col, d.message, source) for d in self.diagnostics]
        self.args = ("\n".join(str(d) for d in self.diagnostics),)
        return self


class AndlSyntaxError(AndlError):
    pass


class AndlValidationError(AndlError):
    pass


class Infeasible(AndlError):
    pass


class LcmOverflow(Infeasible):
    pass
