"""Tokenizer for the network description language."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import AndlSyntaxError, Diagnostic

# unit -> (dimension, factor to base unit); bases are ps, bytes and bit/s
UNITS: dict[str, tuple[str, int]] = {
    "ps": ("time", 1),
    "ns": ("time", 1_000),
    "us": ("time", 1_000_000),
    "ms": ("time", 1_000_000_000),
    "s": ("time", 1_000_000_000_000),
    "B": ("size", 1),
    "KB": ("size", 1024),
    "MB": ("size", 1024 * 1024),
    "b/s": ("rate", 1),
    "kb/s": ("rate", 1_000),
    "Mb/s": ("rate", 1_000_000),
    "Gb/s": ("rate", 1_000_000_000),
}

PUNCT = ("<-->", "{", "}", ";", ":", ",", ".", "=")
DIGITS = frozenset("0123456789")
IDENT_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
IDENT_CHARS = IDENT_START | DIGITS
UNIT_CHARS = IDENT_CHARS | {"/"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, string, punct, eof
    text: str
    line: int
    col: int
    value: Optional[Fraction] = None
    unit: Optional[str] = None

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)


class Lexer:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.i >= len(self.text):
                return
            if self.text[self.i] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.i += 1

    def _error(self, message: str, line: int, col: int) -> AndlSyntaxError:
        return AndlSyntaxError([Diagnostic(line, col, message)])

    def _skip_space(self) -> None:
        text = self.text
        while self.i < len(text):
            c = text[self.i]
            if c in " \t\r\n\ufeff":
                self._advance()
            elif text.startswith("//", self.i):
                while self.i < len(text) and text[self.i] != "\n":
                    self._advance()
            elif text.startswith("/*", self.i):
                line, col = self.line, self.col
                end = text.find("*/", self.i + 2)
                if end < 0:
                    raise self._error("unterminated comment", line, col)
                self._advance(end + 2 - self.i)
            else:
                return

    def next(self) -> Token:
        self._skip_space()
        text = self.text
        line, col = self.line, self.col
        if self.i >= len(text):
            return Token("eof", "", line, col)
        c = text[self.i]
        for p in PUNCT:
            if text.startswith(p, self.i):
                self._advance(len(p))
                return Token("punct", p, line, col)
        if c in DIGITS or (c in "-+" and self.i + 1 < len(text) and text[self.i + 1] in DIGITS):
            return self._number(line, col)
        if c in IDENT_START:
            start = self.i
            while self.i < len(text) and text[self.i] in IDENT_CHARS:
                self._advance()
            return Token("ident", text[start:self.i], line, col)
        if c == '"':
            self._advance()
            start = self.i
            while self.i < len(text) and text[self.i] not in '"\n':
                self._advance()
            if self.i >= len(text) or text[self.i] != '"':
                raise self._error("unterminated string", line, col)
            value = text[start:self.i]
            self._advance()
            return Token("string", value, line, col)
        raise self._error(f"unexpected character {c!r}", line, col)

    def _number(self, line: int, col: int) -> Token:
        text = self.text
        start = self.i
        if text[self.i] in "-+":
            self._advance()
        if text.startswith(("0x", "0X"), self.i):
            self._advance(2)
            digits_start = self.i
            while self.i < len(text) and text[self.i] in "0123456789abcdefABCDEF":
                self._advance()
            if self.i == digits_start:
                raise self._error("malformed hexadecimal number", line, col)
            raw = text[start:self.i]
            value = Fraction(int(raw, 16))
        else:
            while self.i < len(text) and text[self.i] in DIGITS:
                self._advance()
            if self.i + 1 < len(text) and text[self.i] == "." and text[self.i + 1] in DIGITS:
                self._advance()
                while self.i < len(text) and text[self.i] in DIGITS:
                    self._advance()
            raw = text[start:self.i]
            value = Fraction(raw)
        unit = None
        if self.i < len(text) and text[self.i] in IDENT_START:
            ustart = self.i
            while self.i < len(text) and text[self.i] in UNIT_CHARS:
                self._advance()
            unit = text[ustart:self.i]
            if unit not in UNITS:
                raise self._error(f"unknown unit {unit!r}", line, col)
        return Token("number", text[start:self.i], line, col, value, unit)

    def raw_block(self) -> tuple[str, int]:
        """Return raw text up to the next ``}`` and the line it starts on."""
        start_line = self.line
        end = self.text.find("}", self.i)
        if end < 0:
            raise self._error("unterminated inline block", self.line, self.col)
        raw = self.text[self.i:end]
        self._advance(end - self.i)
        return raw, start_line


def quantity(value: Fraction, unit: Optional[str]) -> tuple[Optional[str], Fraction]:
    """Convert a literal to (dimension, value in base units)."""
    if unit is None:
        return None, value
    dim, factor = UNITS[unit]
    return dim, value * factor
