"""Hand-written lexer for the concrete syntax.

Comments run from `%` to end of line.  Multi-character symbols are matched
greedily, longest first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import LexError, Span

KEYWORDS = {
    "case", "send", "recv", "close", "wait", "assert", "assume", "pay", "get",
    "work", "delay", "when", "now", "impossible", "type", "decl", "proc",
    "eqtype", "exec", "true", "false",
}

# Longest first so greedy matching picks the widest symbol.
SYMBOLS = [
    "<->", "|{", "<{", "+{", "&{", "?{", "!{", "()", "[]", "<>", "<-", "=>",
    "-o", "|-", "|>", "<|", ">=", "<=", "!=", "/\\", "\\/",
    "*", "+", "-", "=", ">", "<", "(", ")", "[", "]", "{", "}", ".", ",", ";",
    ":", "|", "?", "!", "~",
]


@dataclass(frozen=True)
class Token:
    kind: str   # "ident" | "nat" | "keyword" | "symbol" | "eof"
    lexeme: str
    span: Span

    def is_sym(self, s: str) -> bool:
        return self.kind == "symbol" and self.lexeme == s

    def is_kw(self, s: str) -> bool:
        return self.kind == "keyword" and self.lexeme == s


def _ident_start(c: str) -> bool:
    return c.isalpha() or c in "_$"


def _ident_char(c: str) -> bool:
    return c.isalnum() or c in "_$'"


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == "%":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c == "#":
            # pragma lines are handled before lexing; a stray '#' elsewhere
            # is skipped to end of line the same way
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("nat", source[i:j], Span(i, j, filename)))
            i = j
            continue
        if _ident_start(c):
            j = i
            while j < n and _ident_char(source[j]):
                j += 1
            text = source[i:j]
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, Span(i, j, filename)))
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("symbol", sym, Span(i, i + len(sym), filename)))
                i += len(sym)
                break
        else:
            raise LexError(f"illegal character {c!r}", Span(i, i + 1, filename))
    tokens.append(Token("eof", "", Span(n, n, filename)))
    return tokens
