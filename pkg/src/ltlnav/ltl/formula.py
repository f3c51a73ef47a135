"""LTL abstract syntax, printing and negation normal form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union


@dataclass(frozen=True)
class TrueF:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FalseF:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    f: "Formula"

    def __str__(self) -> str:
        return f"!{_wrap(self.f)}"


@dataclass(frozen=True)
class Next:
    f: "Formula"

    def __str__(self) -> str:
        return f"X {_wrap(self.f)}"


@dataclass(frozen=True)
class Eventually:
    f: "Formula"

    def __str__(self) -> str:
        return f"F {_wrap(self.f)}"


@dataclass(frozen=True)
class Always:
    f: "Formula"

    def __str__(self) -> str:
        return f"G {_wrap(self.f)}"


@dataclass(frozen=True)
class And:
    f: "Formula"
    g: "Formula"

    def __str__(self) -> str:
        return f"({self.f} && {self.g})"


@dataclass(frozen=True)
class Or:
    f: "Formula"
    g: "Formula"

    def __str__(self) -> str:
        return f"({self.f} || {self.g})"


@dataclass(frozen=True)
class Implies:
    f: "Formula"
    g: "Formula"

    def __str__(self) -> str:
        return f"({self.f} -> {self.g})"


@dataclass(frozen=True)
class Until:
    f: "Formula"
    g: "Formula"

    def __str__(self) -> str:
        return f"({self.f} U {self.g})"


@dataclass(frozen=True)
class Release:
    f: "Formula"
    g: "Formula"

    def __str__(self) -> str:
        return f"({self.f} R {self.g})"


Formula = Union[TrueF, FalseF, Atom, Not, Next, Eventually, Always, And, Or, Implies, Until, Release]

TRUE = TrueF()
FALSE = FalseF()

UNARY = (Not, Next, Eventually, Always)
BINARY = (And, Or, Implies, Until, Release)


def _wrap(f: Formula) -> str:
    # binary nodes already print their own parentheses
    return str(f)


def children(f: Formula) -> tuple:
    if isinstance(f, UNARY):
        return (f.f,)
    if isinstance(f, BINARY):
        return (f.f, f.g)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order, left-to-right traversal (duplicates included)."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def atoms(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def depth(f: Formula) -> int:
    kids = children(f)
    return 0 if not kids else 1 + max(depth(k) for k in kids)


def is_literal(f: Formula) -> bool:
    return isinstance(f, (TrueF, FalseF, Atom)) or (isinstance(f, Not) and isinstance(f.f, Atom))


def to_nnf(f: Formula) -> Formula:
    """Push negations onto atoms and expand F, G and -> into U/R/||.

    The result only contains true, false, atoms, negated atoms, &&, ||, X, U and R.
    """
    return _nnf(f, negate=False)


def _nnf(f: Formula, negate: bool) -> Formula:
    if isinstance(f, TrueF):
        return FALSE if negate else TRUE
    if isinstance(f, FalseF):
        return TRUE if negate else FALSE
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return _nnf(f.f, not negate)
    if isinstance(f, Next):
        return Next(_nnf(f.f, negate))
    if isinstance(f, Eventually):
        # F f = true U f ; !F f = false R !f
        if negate:
            return Release(FALSE, _nnf(f.f, True))
        return Until(TRUE, _nnf(f.f, False))
    if isinstance(f, Always):
        if negate:
            return Until(TRUE, _nnf(f.f, True))
        return Release(FALSE, _nnf(f.f, False))
    if isinstance(f, And):
        a, b = _nnf(f.f, negate), _nnf(f.g, negate)
        return Or(a, b) if negate else And(a, b)
    if isinstance(f, Or):
        a, b = _nnf(f.f, negate), _nnf(f.g, negate)
        return And(a, b) if negate else Or(a, b)
    if isinstance(f, Implies):
        if negate:
            return And(_nnf(f.f, False), _nnf(f.g, True))
        return Or(_nnf(f.f, True), _nnf(f.g, False))
    if isinstance(f, Until):
        a, b = _nnf(f.f, negate), _nnf(f.g, negate)
        return Release(a, b) if negate else Until(a, b)
    if isinstance(f, Release):
        a, b = _nnf(f.f, negate), _nnf(f.g, negate)
        return Until(a, b) if negate else Release(a, b)
    raise TypeError(f"not a formula: {f!r}")
