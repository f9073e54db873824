"""Source spans, diagnostics, and the error types shared by all phases."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    """Half-open byte range [start, end) in one source file."""

    start: int = 0
    end: int = 0
    filename: str = "<input>"

    def merge(self, other: "Span") -> "Span":
        return Span(min(self.start, other.start), max(self.end, other.end), self.filename)


NO_SPAN = Span()


class SourceMap:
    """Derives 1-based line/column pairs from byte offsets."""

    def __init__(self, text: str, filename: str = "<input>"):
        self.text = text
        self.filename = filename
        self.line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.line_starts.append(i + 1)

    def position(self, offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(self.line_starts, offset) - 1
        return line + 1, offset - self.line_starts[line] + 1

    def format_span(self, span: Span) -> str:
        l1, c1 = self.position(span.start)
        l2, c2 = self.position(max(span.start, span.end - 1))
        return f"{self.filename}:{l1}.{c1}-{l2}.{c2}"


@dataclass
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Span = NO_SPAN

    def render(self, smap: SourceMap | None = None) -> str:
        where = smap.format_span(self.span) if smap else self.span.filename
        return f"{where}: {self.severity}: {self.message}"


class RastError(Exception):
    """Base for all user-facing failures; carries a span for reporting."""

    def __init__(self, message: str, span: Span = NO_SPAN):
        super().__init__(message)
        self.message = message
        self.span = span

    def diagnostic(self) -> Diagnostic:
        return Diagnostic("error", self.message, self.span)


class LexError(RastError):
    pass


class ParseError(RastError):
    pass


class ValidityError(RastError):
    pass


class ArithError(RastError):
    pass


class UnderflowError(ArithError):
    pass


class NotClosedError(ArithError):
    pass


class NonlinearAtomError(ArithError):
    """Raised by the quantifier eliminator on variable-by-variable products."""


class SubtypeError(RastError):
    pass


class BoundExceededError(SubtypeError):
    def __init__(self, left: str, right: str, bound: int, span: Span = NO_SPAN):
        super().__init__(
            f"subtyping bound of {bound} distinct goals exceeded for pair "
            f"({left}, {right}); consider adding an eqtype assertion",
            span,
        )
        self.pair = (left, right)


class AlternationError(RastError):
    pass


class ReconError(RastError):
    pass


class TypeError_(RastError):
    """Typechecking failure (named to avoid shadowing the builtin)."""


class RuntimeFault(RastError):
    """Interpreter-level violation; unreachable from well-typed programs."""


class StepLimitExceeded(RastError):
    pass


@dataclass
class Reporter:
    """Collects diagnostics; validation keeps going to report many at once."""

    diagnostics: list[Diagnostic] = field(default_factory=list)

    def error(self, message: str, span: Span = NO_SPAN):
        self.diagnostics.append(Diagnostic("error", message, span))

    def warning(self, message: str, span: Span = NO_SPAN):
        self.diagnostics.append(Diagnostic("warning", message, span))

    @property
    def failed(self) -> bool:
        return any(d.severity == "error" for d in self.diagnostics)
