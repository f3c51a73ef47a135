"""Nondeterministic Büchi automata: LTL translation, lasso acceptance, text dump.

The translation is the on-the-fly tableau of Gerth, Peled, Vardi and Wolper
producing a generalized Büchi automaton, followed by a round-robin counter
degeneralization and a trim of states that cannot reach an accepting cycle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .formula import (
    And,
    Atom,
    FalseF,
    Formula,
    Next,
    Not,
    Or,
    Release,
    Until,
    is_literal,
    subformulas,
    to_nnf,
)
from .semantics import LassoWord

Literal = tuple  # (atom name, polarity)
Guard = frozenset  # conjunction of literals; empty == true


def guard_matches(guard: Guard, symbol: Iterable[str]) -> bool:
    sym = symbol if isinstance(symbol, (set, frozenset)) else set(symbol)
    return all((name in sym) == positive for name, positive in guard)


def guard_str(guard: Guard) -> str:
    if not guard:
        return "true"
    return ",".join(("" if pos else "!") + name for name, pos in sorted(guard))


def positive_atoms(guard: Guard) -> list[str]:
    return sorted(name for name, pos in guard if pos)


@dataclass(frozen=True)
class Transition:
    src: int
    guard: Guard
    dst: int


@dataclass(frozen=True)
class NBA:
    states: tuple
    initial: frozenset
    accepting: frozenset
    transitions: tuple
    _out: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        states = set(self.states)
        for t in self.transitions:
            if t.src not in states or t.dst not in states:
                raise ValueError(f"transition {t} references an unknown state")
            names = [n for n, _ in t.guard]
            if len(names) != len(set(names)):
                raise ValueError(f"unsatisfiable guard {guard_str(t.guard)}")
        out: dict = {q: [] for q in self.states}
        for t in self.transitions:
            out[t.src].append(t)
        self._out.update(out)

    def outgoing(self, q: int) -> list:
        return self._out[q]

    def successors(self, q: int, symbol: Iterable[str]) -> list[int]:
        """Distinct successor states of ``q`` on ``symbol``, in transition order."""
        sym = frozenset(symbol)
        seen: list[int] = []
        for t in self._out[q]:
            if t.dst not in seen and guard_matches(t.guard, sym):
                seen.append(t.dst)
        return seen

    def guard_of(self, src: int, dst: int, symbol: Iterable[str]) -> Optional[Guard]:
        """The matching guard on an edge ``src -> dst`` with the most positive literals."""
        sym = frozenset(symbol)
        best = None
        for t in self._out[src]:
            if t.dst == dst and guard_matches(t.guard, sym):
                if best is None or len(positive_atoms(t.guard)) > len(positive_atoms(best)):
                    best = t.guard
        return best

    def is_empty(self) -> bool:
        return not self.accepting


# ---------------------------------------------------------------------------
# tableau construction


class _Node:
    __slots__ = ("id", "incoming", "new", "old", "next")

    def __init__(self, incoming, new, old, nxt):
        self.id = -1
        self.incoming = set(incoming)
        self.new = set(new)
        self.old = set(old)
        self.next = set(nxt)

    def split(self):
        return _Node(self.incoming, self.new, self.old, self.next)


def _negation(lit: Formula) -> Formula:
    return lit.f if isinstance(lit, Not) else Not(lit)


def _expand_all(phi: Formula) -> list[_Node]:
    nodes: list[_Node] = []
    stack = [_Node({0}, {phi}, set(), set())]
    while stack:
        nd = stack.pop()
        if not nd.new:
            for other in nodes:
                if other.old == nd.old and other.next == nd.next:
                    other.incoming |= nd.incoming
                    break
            else:
                nd.id = len(nodes) + 1
                nodes.append(nd)
                stack.append(_Node({nd.id}, nd.next, set(), set()))
            continue
        eta = max(nd.new, key=str)
        nd.new.discard(eta)
        if is_literal(eta):
            if isinstance(eta, FalseF) or _negation(eta) in nd.old:
                continue
            # true is kept in old so that "f U true" lands in its acceptance set
            nd.old.add(eta)
            stack.append(nd)
            continue
        if eta in nd.old:
            stack.append(nd)
            continue
        nd.old.add(eta)
        if isinstance(eta, And):
            nd.new |= {eta.f, eta.g} - nd.old
            stack.append(nd)
        elif isinstance(eta, Next):
            nd.next.add(eta.f)
            stack.append(nd)
        elif isinstance(eta, (Or, Until, Release)):
            other = nd.split()
            if isinstance(eta, Or):
                nd.new |= {eta.f} - nd.old
                other.new |= {eta.g} - other.old
            elif isinstance(eta, Until):
                nd.new |= {eta.f} - nd.old
                nd.next.add(eta)
                other.new |= {eta.g} - other.old
            else:
                nd.new |= {eta.g} - nd.old
                nd.next.add(eta)
                other.new |= {eta.f, eta.g} - other.old
            # process the first branch first
            stack.append(other)
            stack.append(nd)
        else:
            raise TypeError(f"formula not in NNF: {eta}")
    return nodes


def _node_guard(nd: _Node) -> Guard:
    lits = set()
    for f in nd.old:
        if isinstance(f, Atom):
            lits.add((f.name, True))
        elif isinstance(f, Not) and isinstance(f.f, Atom):
            lits.add((f.f.name, False))
    return frozenset(lits)


def translate(f: Formula) -> NBA:
    """Compile ``f`` into an NBA accepting exactly the words that satisfy it."""
    phi = to_nnf(f)
    nodes = _expand_all(phi)

    # acceptance sets, one per until subformula, ordered by first appearance
    untils: list[Until] = []
    for g in subformulas(phi):
        if isinstance(g, Until) and g not in untils:
            untils.append(g)
    acc_sets = [
        {nd.id for nd in nodes if u.g in nd.old or u not in nd.old} for u in untils
    ]
    k = len(acc_sets)

    gba_succ: dict = {0: []}
    for nd in nodes:
        gba_succ.setdefault(nd.id, [])
    for nd in nodes:
        for p in sorted(nd.incoming):
            gba_succ[p].append(nd.id)
    guards = {nd.id: _node_guard(nd) for nd in nodes}

    # degeneralize: states (gba node, counter), explored breadth-first
    def level_after(p: int, i: int) -> int:
        if k == 0 or p == 0:
            return i
        return (i + 1) % k if p in acc_sets[i] else i

    start = (0, 0)
    index = {start: 0}
    order = [start]
    edges: list[tuple] = []
    queue = deque([start])
    while queue:
        p, i = queue.popleft()
        j = level_after(p, i)
        for q in gba_succ[p]:
            tgt = (q, j)
            if tgt not in index:
                index[tgt] = len(order)
                order.append(tgt)
                queue.append(tgt)
            edges.append((index[(p, i)], guards[q], index[tgt]))

    def accepting(state) -> bool:
        p, i = state
        if p == 0:
            return False
        return True if k == 0 else (i == 0 and p in acc_sets[0])

    acc = {index[s] for s in order if accepting(s)}
    return _trim(len(order), {0}, acc, edges)


def _trim(n: int, initial: set, accepting: set, edges: list) -> NBA:
    succ: dict = {s: set() for s in range(n)}
    pred: dict = {s: set() for s in range(n)}
    for a, _, b in edges:
        succ[a].add(b)
        pred[b].add(a)

    def reach(starts, adj) -> set:
        seen = set(starts)
        queue = deque(starts)
        while queue:
            s = queue.popleft()
            for t in adj[s]:
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        return seen

    forward = reach(initial, succ)
    live_acc = {a for a in accepting if a in forward and a in reach(succ[a], succ)}
    keep = forward & reach(live_acc, pred)
    if not keep:
        return NBA(states=(0,), initial=frozenset({0}), accepting=frozenset(), transitions=())
    # renumber in breadth-first order from the initial states
    ordered = _bfs_order(initial & keep, {s: sorted(succ[s] & keep) for s in keep})
    remap = {s: i for i, s in enumerate(ordered)}
    transitions = tuple(
        Transition(remap[a], g, remap[b]) for a, g, b in edges if a in keep and b in keep
    )
    return NBA(
        states=tuple(range(len(ordered))),
        initial=frozenset(remap[s] for s in initial & keep),
        accepting=frozenset(remap[s] for s in live_acc),
        transitions=_dedup(transitions),
    )


def _bfs_order(starts, adj) -> list:
    order = sorted(starts)
    seen = set(order)
    queue = deque(order)
    while queue:
        s = queue.popleft()
        for t in adj[s]:
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return order


def _dedup(transitions) -> tuple:
    seen = set()
    out = []
    for t in transitions:
        key = (t.src, t.guard, t.dst)
        if key not in seen:
            seen.add(key)
            out.append(t)
    return tuple(out)


# ---------------------------------------------------------------------------
# acceptance of lasso words


def accepting_run(a: NBA, w: LassoWord) -> Optional[tuple]:
    """An accepting run of ``a`` on ``w`` as ``(stem, loop)`` or ``None``.

    Both parts are lists of ``(state, position)`` pairs in the product of the
    automaton with the folded word; ``stem`` ends where ``loop`` begins, and the
    last element of ``loop`` steps back to ``loop[0]``.
    """
    def step(node):
        q, i = node
        j = w.successor(i)
        return [(r, j) for r in a.successors(q, w.symbol(i))]

    starts = [(q, 0) for q in sorted(a.initial)]
    parent: dict = {s: None for s in starts}
    order = list(starts)
    queue = deque(starts)
    while queue:
        node = queue.popleft()
        for nxt in step(node):
            if nxt not in parent:
                parent[nxt] = node
                order.append(nxt)
                queue.append(nxt)

    for node in order:
        q, i = node
        if q not in a.accepting or i < len(w.prefix):
            continue
        loop = _cycle_through(node, step)
        if loop is None:
            continue
        stem = []
        cur = node
        while cur is not None:
            stem.append(cur)
            cur = parent[cur]
        stem.reverse()
        return stem, loop
    return None


def _cycle_through(node, step) -> Optional[list]:
    parent: dict = {}
    queue = deque()
    for nxt in step(node):
        if nxt not in parent:
            parent[nxt] = node
            queue.append(nxt)
    while queue:
        cur = queue.popleft()
        if cur == node:
            path = []
            back = parent[cur]
            while back != node:
                path.append(back)
                back = parent[back]
            path.append(node)
            path.reverse()
            return path
        for nxt in step(cur):
            if nxt not in parent:
                parent[nxt] = cur
                queue.append(nxt)
    return None


def accepts_lasso(a: NBA, w: LassoWord) -> bool:
    """True iff some run of ``a`` over ``w`` visits an accepting state infinitely often."""
    return accepting_run(a, w) is not None


# ---------------------------------------------------------------------------
# text exchange format


def dump(a: NBA) -> str:
    """Plain-text graph listing: header, one line per state, one line per edge."""
    lines = [f"nba states={len(a.states)}"]
    for q in a.states:
        flags = [f for f, on in (("initial", q in a.initial), ("accepting", q in a.accepting)) if on]
        lines.append(" ".join([f"state {q}", *flags]))
    for t in a.transitions:
        lines.append(f"{t.src} -> {t.dst} : {guard_str(t.guard)}")
    return "\n".join(lines) + "\n"


def load(text: str) -> NBA:
    states, initial, accepting, transitions = [], set(), set(), []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("nba"):
            continue
        if line.startswith("state"):
            parts = line.split()
            q = int(parts[1])
            states.append(q)
            if "initial" in parts[2:]:
                initial.add(q)
            if "accepting" in parts[2:]:
                accepting.add(q)
            continue
        edge, _, guard_text = line.partition(":")
        src, _, dst = edge.partition("->")
        guard = set()
        for lit in guard_text.strip().split(","):
            lit = lit.strip()
            if lit and lit != "true":
                guard.add((lit.lstrip("!"), not lit.startswith("!")))
        transitions.append(Transition(int(src), frozenset(guard), int(dst)))
    return NBA(tuple(states), frozenset(initial), frozenset(accepting), tuple(transitions))
