"""Direct LTL semantics on ultimately periodic words.

This is the reference oracle for the automaton translation, so it works on the
raw syntax tree (F, G and -> included) and never goes through NNF or automata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .formula import (
    Always,
    And,
    Atom,
    Eventually,
    FalseF,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
)

Symbol = frozenset


@dataclass(frozen=True)
class LassoWord:
    """The infinite word ``prefix · cycle^ω``; each symbol is a set of atom names."""

    prefix: tuple
    cycle: tuple

    def __init__(self, prefix: Iterable[Iterable[str]], cycle: Iterable[Iterable[str]]):
        object.__setattr__(self, "prefix", tuple(frozenset(s) for s in prefix))
        object.__setattr__(self, "cycle", tuple(frozenset(s) for s in cycle))
        if not self.cycle:
            raise ValueError("lasso cycle must contain at least one symbol")

    def __len__(self) -> int:
        return len(self.prefix) + len(self.cycle)

    def symbol(self, i: int) -> frozenset:
        """Symbol at folded position ``i`` (``0 <= i < len(self)``)."""
        p = len(self.prefix)
        return self.prefix[i] if i < p else self.cycle[i - p]

    def successor(self, i: int) -> int:
        return i + 1 if i + 1 < len(self) else len(self.prefix)

    def at(self, n: int) -> frozenset:
        """Symbol at unfolded position ``n`` of the infinite word."""
        p = len(self.prefix)
        if n < p:
            return self.prefix[n]
        return self.cycle[(n - p) % len(self.cycle)]


def eval_lasso(f: Formula, w: LassoWord) -> bool:
    """Truth of ``f`` at position 0 of ``w``."""
    return _Evaluator(w).values(f)[0]


def eval_lasso_all(f: Formula, w: LassoWord) -> list[bool]:
    """Truth of ``f`` at every folded position of ``w``."""
    return list(_Evaluator(w).values(f))


class _Evaluator:
    def __init__(self, w: LassoWord):
        self.w = w
        self.n = len(w)
        self.succ = [w.successor(i) for i in range(self.n)]
        self.memo: dict = {}

    def values(self, f: Formula) -> tuple:
        hit = self.memo.get(f)
        if hit is None:
            hit = self.memo[f] = tuple(self._compute(f))
        return hit

    def _compute(self, f: Formula) -> Sequence[bool]:
        n, succ = self.n, self.succ
        if isinstance(f, TrueF):
            return [True] * n
        if isinstance(f, FalseF):
            return [False] * n
        if isinstance(f, Atom):
            return [f.name in self.w.symbol(i) for i in range(n)]
        if isinstance(f, Not):
            return [not v for v in self.values(f.f)]
        if isinstance(f, And):
            a, b = self.values(f.f), self.values(f.g)
            return [x and y for x, y in zip(a, b)]
        if isinstance(f, Or):
            a, b = self.values(f.f), self.values(f.g)
            return [x or y for x, y in zip(a, b)]
        if isinstance(f, Implies):
            a, b = self.values(f.f), self.values(f.g)
            return [(not x) or y for x, y in zip(a, b)]
        if isinstance(f, Next):
            a = self.values(f.f)
            return [a[succ[i]] for i in range(n)]
        if isinstance(f, Eventually):
            return self._until([True] * n, self.values(f.f))
        if isinstance(f, Always):
            return self._release([False] * n, self.values(f.f))
        if isinstance(f, Until):
            return self._until(self.values(f.f), self.values(f.g))
        if isinstance(f, Release):
            return self._release(self.values(f.f), self.values(f.g))
        raise TypeError(f"not a formula: {f!r}")

    def _until(self, a, b) -> list[bool]:
        # least fixpoint of v = b | (a & X v)
        v = [False] * self.n
        changed = True
        while changed:
            changed = False
            for i in reversed(range(self.n)):
                new = b[i] or (a[i] and v[self.succ[i]])
                if new != v[i]:
                    v[i] = new
                    changed = True
        return v

    def _release(self, a, b) -> list[bool]:
        # greatest fixpoint of v = b & (a | X v)
        v = [True] * self.n
        changed = True
        while changed:
            changed = False
            for i in reversed(range(self.n)):
                new = b[i] and (a[i] or v[self.succ[i]])
                if new != v[i]:
                    v[i] = new
                    changed = True
        return v
