"""Tokenizer for the specification language."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, List, Optional

from .errors import LexError, Loc

KEYWORDS = frozenset(
    "abstract one lone some set sig extends fact pred assert check run "
    "all in not and or for".split()
)

# longest first so that "=>" wins over "="
PUNCTUATION = ("!=", "<=", ">=", "=>", "{", "}", "[", "]", "(", ")", ":", ",", ".",
               "+", "#", "=", "<", ">", "|")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_INT = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | int | string | punct | eof
    lexeme: str
    line: int
    col: int

    @property
    def value(self):
        if self.kind == "int":
            return int(self.lexeme)
        if self.kind == "string":
            return self.lexeme[1:-1]
        return self.lexeme

    def is_(self, *lexemes: str) -> bool:
        return self.kind in ("keyword", "punct") and self.lexeme in lexemes


def tokenize(source: str, filename: Optional[str] = None) -> List[Token]:
    """Split ``source`` into tokens, dropping whitespace and ``//`` comments.

    The returned list always ends with an ``eof`` token.
    """
    tokens: List[Token] = []
    line, col, i, n = 1, 1, 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch in " \t\r\f﻿":
            i, col = i + 1, col + 1
            continue
        if source.startswith("//", i):
            end = source.find("\n", i)
            end = n if end < 0 else end
            col += end - i
            i = end
            continue
        if ch == '"':
            end = i + 1
            while end < n and source[end] not in '"\n':
                end += 1
            if end >= n or source[end] != '"':
                raise LexError("unterminated string", Loc(line, col, filename))
            lexeme = source[i:end + 1]
            tokens.append(Token("string", lexeme, line, col))
            col += len(lexeme)
            i = end + 1
            continue
        m = _IDENT.match(source, i) or _INT.match(source, i)
        if m:
            lexeme = m.group()
            if lexeme[0].isdigit():
                kind = "int"
            else:
                kind = "keyword" if lexeme in KEYWORDS else "ident"
            tokens.append(Token(kind, lexeme, line, col))
            col += len(lexeme)
            i = m.end()
            continue
        for p in PUNCTUATION:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, line, col))
                col += len(p)
                i += len(p)
                break
        else:
            raise LexError(f"illegal character {ch!r}", Loc(line, col, filename))
    tokens.append(Token("eof", "", line, col))
    return tokens


def detokenize(tokens: Iterable[Token]) -> str:
    """Lay tokens back out at their recorded positions.

    Re-tokenizing the result reproduces the same token stream, positions
    included, as long as the tokens came from :func:`tokenize`.
    """
    lines: List[str] = []
    for tok in tokens:
        if tok.kind == "eof":
            continue
        while len(lines) < tok.line:
            lines.append("")
        cur = lines[tok.line - 1]
        pad = tok.col - 1 - len(cur)
        if pad < 0 or (pad == 0 and cur and _glues(cur[-1], tok.lexeme[0])):
            raise ValueError(f"token {tok.lexeme!r} overlaps the previous one")
        lines[tok.line - 1] = cur + " " * pad + tok.lexeme
    return "\n".join(lines)


def _glues(prev: str, nxt: str) -> bool:
    word = re.compile(r"[A-Za-z0-9_']")
    return bool(word.match(prev) and word.match(nxt)) or prev + nxt in ("!=", "<=", ">=", "=>", "//")
