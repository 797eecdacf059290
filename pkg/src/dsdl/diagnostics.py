"""Diagnostics: coded, severity-tagged, path-located findings.

Every problem the toolchain reports -- from a malformed header to a
wrong-arity bounding box -- is a :class:`Diagnostic`. Codes are stable
strings; paths are slash-separated locations into the document or the
sample data (e.g. ``samples/3/objects/0/bbox``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    NOTE = "note"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.value


@dataclass(frozen=True)
class Diagnostic:
    """A single located finding."""

    code: str
    severity: Severity
    path: str
    message: str
    source: str | None = None

    def format(self) -> str:
        """One-line rendering: ``severity code path message``."""
        return f"{self.severity.value} {self.code} {self.path} {self.message}"

    def to_jsonable(self) -> dict:
        out = {
            "severity": self.severity.value,
            "code": self.code,
            "path": self.path,
            "message": self.message,
        }
        if self.source is not None:
            out["source"] = self.source
        return out


def error(code: str, path: str, message: str, source: str | None = None) -> Diagnostic:
    return Diagnostic(code, Severity.ERROR, path, message, source)


def warning(code: str, path: str, message: str, source: str | None = None) -> Diagnostic:
    return Diagnostic(code, Severity.WARNING, path, message, source)


def note(code: str, path: str, message: str, source: str | None = None) -> Diagnostic:
    return Diagnostic(code, Severity.NOTE, path, message, source)


class DsdlError(Exception):
    """Base error; carries the diagnostic it would report."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.format())
        self.diagnostic = diagnostic

    @property
    def code(self) -> str:
        return self.diagnostic.code


class DocumentError(DsdlError):
    """Fatal problem while parsing a description or library file."""


class GrammarError(DsdlError):
    """Type-expression text violates the grammar."""

    def __init__(self, message: str, offset: int, path: str = "", code: str = "GRAMMAR_ERROR"):
        super().__init__(error(code, path, f"{message} (at offset {offset})"))
        self.offset = offset


class ResolutionError(DsdlError):
    """Import, definition, or instantiation failure."""


class ClassLookupError(DsdlError):
    """Class selector does not address a class in the domain."""


class LocatorError(DsdlError):
    """Object-locator parse or resolution failure."""


@dataclass
class DiagnosticBag:
    """Ordered accumulator used by the validation passes."""

    items: list[Diagnostic] = field(default_factory=list)

    def add(self, diag: Diagnostic) -> None:
        self.items.append(diag)

    def extend(self, diags) -> None:
        self.items.extend(diags)

    def error_count(self) -> int:
        return sum(1 for d in self.items if d.severity is Severity.ERROR)

    def warning_count(self) -> int:
        return sum(1 for d in self.items if d.severity is Severity.WARNING)

    def has_errors(self) -> bool:
        return any(d.severity is Severity.ERROR for d in self.items)

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)
