"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence


@dataclass(frozen=True)
class Loc:
    """A 1-based source position."""

    line: int
    col: int
    file: Optional[str] = None

    def __str__(self) -> str:
        prefix = f"{self.file}:" if self.file else ""
        return f"{prefix}{self.line}:{self.col}"


class RelspecError(Exception):
    """Base class; carries an optional source location."""

    def __init__(self, message: str, loc: Optional[Loc] = None):
        super().__init__(message)
        self.message = message
        self.loc = loc

    def diagnostic(self) -> str:
        where = f"{self.loc}: " if self.loc else ""
        return f"{where}error: {self.message}"


# -- frontend ---------------------------------------------------------------


class LexError(RelspecError):
    pass


class ParseError(RelspecError):
    def __init__(self, message: str, loc: Loc, expected: Sequence[str] = ()):
        super().__init__(message, loc)
        self.expected = list(expected)

    @property
    def line(self) -> int:
        return self.loc.line

    @property
    def col(self) -> int:
        return self.loc.col


# -- analysis ---------------------------------------------------------------


class AnalysisError(RelspecError):
    pass


class StructureViolations(AnalysisError):
    """Raised when structural_check reports problems and analysis cannot proceed."""

    def __init__(self, violations):
        first = violations[0]
        super().__init__(first.message, first.loc)
        self.violations = list(violations)


class ResolveError(AnalysisError):
    pass


class CycleError(AnalysisError):
    pass


class ArityError(AnalysisError):
    pass


class TypeCheckError(AnalysisError):
    pass


# -- evaluation / search ----------------------------------------------------


class EvalError(RelspecError):
    pass


class StructureError(RelspecError):
    """An instance breaks the universe/relation invariants."""


class BoundsError(RelspecError):
    pass


class ExplosionError(RelspecError):
    """The exhaustive enumerator would exceed its candidate ceiling."""


class FinderTimeout(RelspecError):
    pass


class UnknownAssert(ResolveError):
    pass


class UnknownPred(ResolveError):
    pass


# -- class-model bridge -----------------------------------------------------


class SchemaError(RelspecError):
    pass


class UnsupportedFeature(RelspecError):
    pass
