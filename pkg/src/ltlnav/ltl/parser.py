"""Recursive-descent parser for textual LTL.

Precedence, tightest first: unary (! X F G) > U, R (right-assoc) > && > || > ->
(right-assoc).  ASCII and the usual Unicode glyphs are both accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .formula import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Eventually,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    Release,
    Until,
)


class LTLSyntaxError(ValueError):
    """Malformed formula text.

    ``position`` is the 1-based index of the offending token (``len(tokens) + 1``
    at end of input); ``column`` is the 0-based character offset.
    """

    def __init__(self, position: int, column: int, expected: str, found: str):
        self.position = position
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(f"token {position} (column {column}): expected {expected}, found {found!r}")


class UnknownProposition(ValueError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown proposition {name!r}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int


_SYMBOLS = [
    ("&&", "AND"), ("||", "OR"), ("->", "IMPLIES"), ("<>", "F"), ("[]", "G"),
    ("∧", "AND"), ("&", "AND"), ("∨", "OR"), ("|", "OR"), ("→", "IMPLIES"),
    ("¬", "NOT"), ("!", "NOT"), ("◇", "F"), ("♢", "F"), ("□", "G"), ("○", "X"),
    ("(", "LPAREN"), (")", "RPAREN"),
]
_KEYWORDS = {"true": "TRUE", "false": "FALSE", "X": "X", "U": "U", "R": "R", "F": "F", "G": "G"}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        for sym, kind in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token(kind, sym, i))
                i += len(sym)
                break
        else:
            m = _IDENT.match(text, i)
            if m is None:
                raise LTLSyntaxError(len(tokens) + 1, i, "a token", ch)
            word = m.group()
            tokens.append(Token(_KEYWORDS.get(word, "IDENT"), word, i))
            i = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, alphabet: Optional[Iterable[str]]):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.alphabet = None if alphabet is None else set(alphabet)

    def peek(self) -> Optional[Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def fail(self, expected: str):
        tok = self.peek()
        if tok is None:
            raise LTLSyntaxError(self.i + 1, len(self.text), expected, "<end>")
        raise LTLSyntaxError(self.i + 1, tok.column, expected, tok.text)

    def accept(self, kind: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.kind == kind:
            self.i += 1
            return True
        return False

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek() is not None:
            self.fail("an operator or end of input")
        return f

    def implication(self) -> Formula:
        lhs = self.disjunction()
        if self.accept("IMPLIES"):
            return Implies(lhs, self.implication())
        return lhs

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.accept("OR"):
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.binary_temporal()
        while self.accept("AND"):
            f = And(f, self.binary_temporal())
        return f

    def binary_temporal(self) -> Formula:
        lhs = self.unary()
        if self.accept("U"):
            return Until(lhs, self.binary_temporal())
        if self.accept("R"):
            return Release(lhs, self.binary_temporal())
        return lhs

    def unary(self) -> Formula:
        for kind, node in (("NOT", Not), ("X", Next), ("F", Eventually), ("G", Always)):
            if self.accept(kind):
                return node(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok is None or tok.kind not in ("TRUE", "FALSE", "IDENT", "LPAREN"):
            self.fail("a proposition, constant, unary operator or '('")
        self.i += 1
        if tok.kind == "TRUE":
            return TRUE
        if tok.kind == "FALSE":
            return FALSE
        if tok.kind == "IDENT":
            if self.alphabet is not None and tok.text not in self.alphabet:
                raise UnknownProposition(tok.text)
            return Atom(tok.text)
        f = self.implication()
        if not self.accept("RPAREN"):
            self.fail("')'")
        return f


def parse(text: str, alphabet: Optional[Iterable[str]] = None) -> Formula:
    """Parse LTL text.  With ``alphabet`` given, atoms outside it are rejected."""
    if not text or not text.strip():
        raise LTLSyntaxError(1, 0, "a formula", "<end>")
    return _Parser(text, alphabet).parse()
