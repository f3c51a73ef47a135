"""Sampling-based optimal LTL planning over the implicit product of workspace and NBA.

Product states are ``(x, q)``; ``(x, q) -> (x', q')`` is allowed when the
workspace step ``x -> x'`` is feasible and ``q'`` is an NBA successor of ``q``
under the label of ``x``.  The product is never materialised: an RRT*-style
tree is grown over it for the prefix, and further trees rooted at accepting
prefix nodes search for the cheapest loop back to their root.

All trees advance in lockstep, one sample each per iteration, from per-tree
random streams derived from the seed.  A larger budget therefore replays a
smaller one exactly, which makes the returned cost non-increasing in
``n_samples``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ltl.automaton import NBA, accepting_run, positive_atoms
from .ltl.semantics import LassoWord
from .workspace import (
    TOL,
    EnvState,
    Point,
    Workspace,
    dist,
    label_at,
    sample_free,
    segment_free,
    symbol_of,
)


class NoPlanFound(RuntimeError):
    """No accepting lasso was found within the sample budget."""


@dataclass(frozen=True)
class PlannerParams:
    n_samples: int = 2000
    rewire_gamma: float = 6.0
    goal_bias: float = 0.1
    seed: int = 0
    k_suffix: int = 5


@dataclass(frozen=True)
class PlanNode:
    x: Point
    q: int
    cost: float
    symbol: frozenset = frozenset()
    # (class, object id, object position) of prior-map objects labelling x
    witnesses: tuple = ()


@dataclass
class PrefixSuffixPlan:
    prefix: list
    suffix: list
    nba: NBA = field(repr=False)
    constraints: dict = field(default_factory=dict, repr=False)

    @property
    def cost(self) -> tuple:
        return (self.prefix[-1].cost, self.suffix[-1].cost)

    @property
    def total_cost(self) -> float:
        return sum(self.cost)

    def word(self) -> LassoWord:
        """Label word of the lasso: prefix labels, then the repeated suffix labels."""
        return LassoWord([n.symbol for n in self.prefix[:-1]], [n.symbol for n in self.suffix[:-1]])

    def nodes(self) -> list:
        """The lasso unrolled once: prefix followed by the suffix without its head."""
        return list(self.prefix) + list(self.suffix[1:])


# ---------------------------------------------------------------------------


class _Labeler:
    def __init__(self, ws: Workspace, env: EnvState, constraints: dict, alphabet):
        self.ws = ws
        self.env = env
        self.constraints = constraints
        self.alphabet = frozenset(alphabet)

    def symbol(self, x) -> frozenset:
        return symbol_of(label_at(self.ws, self.env, x), self.constraints, self.alphabet)

    def witnesses(self, x) -> tuple:
        out = []
        for o in self.env.objects:
            if o.class_name not in self.alphabet or dist(x, o.position) > self.ws.epsilon_sat + TOL:
                continue
            regions = self.constraints.get(o.class_name)
            if regions and self.ws.region_of(o.position) not in regions:
                continue
            out.append((o.class_name, o.id, o.position))
        return tuple(sorted(out, key=lambda w: (w[0], dist(x, w[2]), w[1])))

    def goals(self) -> list:
        """Positions of prior-map objects able to satisfy some proposition."""
        pts = []
        for o in self.env.objects:
            if o.class_name not in self.alphabet:
                continue
            regions = self.constraints.get(o.class_name)
            if regions and self.ws.region_of(o.position) not in regions:
                continue
            pts.append(o.position)
        return pts


class _Succ:
    """Memoised NBA successor lookup."""

    def __init__(self, nba: NBA):
        self.nba = nba
        self.cache: dict = {}

    def __call__(self, q: int, sym: frozenset) -> list:
        key = (q, sym)
        hit = self.cache.get(key)
        if hit is None:
            hit = self.cache[key] = self.nba.successors(q, sym)
        return hit


class ProductTree:
    """RRT* tree over product states ``(x, q)`` rooted at one product state."""

    def __init__(self, ws: Workspace, labeler: _Labeler, succ: _Succ, root_x, root_q: int,
                 rng: np.random.Generator, params: PlannerParams, goals: Sequence):
        self.ws = ws
        self.labeler = labeler
        self.succ = succ
        self.rng = rng
        self.params = params
        self.goals = [Point(*g) for g in goals]
        self._vx = np.zeros((64, 2))
        self.nverts = 0
        self.vsym: list = []
        self.vnodes: list = []  # per vertex: {q: node id}
        self.node_v: list = []
        self.node_q: list = []
        self.cost: list = []
        self.parent: list = []
        self.children: list = []
        self.adj: list = []  # per vertex: [(neighbour vertex, distance)]
        v = self._add_vertex(Point(*root_x))
        self.root = self._add_node(v, root_q, 0.0, None)
        self._propagate([(0.0, self.root)])

    # -- storage ----------------------------------------------------------
    def _add_vertex(self, x: Point) -> int:
        if self.nverts == len(self._vx):
            self._vx = np.vstack([self._vx, np.zeros_like(self._vx)])
        self._vx[self.nverts] = x
        self.nverts += 1
        self.vsym.append(self.labeler.symbol(x))
        self.vnodes.append({})
        self.adj.append([])
        return self.nverts - 1

    def _add_node(self, v: int, q: int, cost: float, parent: Optional[int]) -> int:
        nid = len(self.node_q)
        self.node_v.append(v)
        self.node_q.append(q)
        self.cost.append(cost)
        self.parent.append(parent)
        self.children.append(set())
        if parent is not None:
            self.children[parent].add(nid)
        self.vnodes[v][q] = nid
        return nid

    def x_of(self, nid: int) -> Point:
        return self.vertex(self.node_v[nid])

    def vertex(self, v: int) -> Point:
        return Point(float(self._vx[v, 0]), float(self._vx[v, 1]))

    def _reparent(self, nid: int, new_parent: int, new_cost: float) -> list:
        old = self.parent[nid]
        if old is not None:
            self.children[old].discard(nid)
        self.parent[nid] = new_parent
        self.children[new_parent].add(nid)
        delta = new_cost - self.cost[nid]
        stack = [nid]
        moved = []
        while stack:
            n = stack.pop()
            self.cost[n] += delta
            moved.append(n)
            stack.extend(self.children[n])
        return moved

    # -- growth -----------------------------------------------------------
    def _sample(self) -> Point:
        if self.goals and self.rng.random() < self.params.goal_bias:
            g = self.goals[int(self.rng.integers(len(self.goals)))]
            r = self.ws.epsilon_sat * math.sqrt(self.rng.random())
            th = self.rng.uniform(0.0, 2.0 * math.pi)
            p = Point(g.x + r * math.cos(th), g.y + r * math.sin(th))
            if self.ws.in_bounds(p) and self.ws.point_free(p):
                return p
        return sample_free(self.ws, self.rng)

    def near_radius(self) -> float:
        n = self.nverts
        if n < 2:
            return self.ws.eta
        return min(self.ws.eta, self.params.rewire_gamma * math.sqrt(math.log(n) / n))

    def extend(self) -> list:
        """One RRT* iteration.  Returns the ids of the nodes created."""
        x_rand = self._sample()
        vx = self._vx[: self.nverts]
        d2 = np.sum((vx - x_rand) ** 2, axis=1)
        v_near = int(np.argmin(d2))
        base = vx[v_near]
        d = math.sqrt(float(d2[v_near]))
        if d < 1e-12:
            return []
        step = min(self.ws.eta, d)
        x_new = Point(float(base[0] + (x_rand.x - base[0]) * step / d),
                      float(base[1] + (x_rand.y - base[1]) * step / d))
        if not self.ws.point_free(x_new):
            return []
        r = self.near_radius()
        dn = np.sqrt(np.sum((vx - x_new) ** 2, axis=1))
        cand = sorted(set(np.flatnonzero(dn <= r + TOL).tolist()) | {v_near})
        near = [(v, float(dn[v])) for v in cand
                if dn[v] <= self.ws.eta + TOL and segment_free(self.ws, self.vertex(v), x_new)]
        if not near:
            return []
        vn = self._add_vertex(x_new)
        for v, dv in near:
            self.adj[v].append((vn, dv))
            self.adj[vn].append((v, dv))
        first = len(self.node_q)
        heap: list = []
        for v, dv in near:
            sym = self.vsym[v]
            for nid in list(self.vnodes[v].values()):
                for q2 in self.succ(self.node_q[nid], sym):
                    self._offer(vn, q2, self.cost[nid] + dv, nid, heap)
        self._propagate(heap)
        return list(range(first, len(self.node_q)))

    def _offer(self, v: int, q: int, cost: float, parent: int, heap: list) -> None:
        """Create or improve product node ``(v, q)`` via ``parent``."""
        other = self.vnodes[v].get(q)
        if other is None:
            nid = self._add_node(v, q, cost, parent)
            heapq.heappush(heap, (cost, nid))
        elif cost < self.cost[other] - 1e-9:
            for n in self._reparent(other, parent, cost):
                heapq.heappush(heap, (self.cost[n], n))

    def _propagate(self, heap: list) -> None:
        # decrease-only Dijkstra over the product of the vertex graph and the NBA;
        # the zero-cost edge back to the same vertex is the stay transition
        while heap:
            c, nid = heapq.heappop(heap)
            if c > self.cost[nid] + 1e-12:
                continue
            v = self.node_v[nid]
            targets = self.succ(self.node_q[nid], self.vsym[v])
            if not targets:
                continue
            for q2 in targets:
                self._offer(v, q2, c, nid, heap)
            for w, d in self.adj[v]:
                for q2 in targets:
                    self._offer(w, q2, c + d, nid, heap)

    def path_to(self, nid: int) -> list:
        out = []
        while nid is not None:
            out.append(nid)
            nid = self.parent[nid]
        out.reverse()
        return out


# ---------------------------------------------------------------------------


def _child_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def plan(ws: Workspace, env0: EnvState, nba: NBA, x0, params: PlannerParams = PlannerParams(),
         constraints: Optional[dict] = None, alphabet=None) -> PrefixSuffixPlan:
    """Minimum-cost prefix-suffix plan found with ``params.n_samples`` iterations.

    ``constraints`` maps a class to the regions its objects must lie in for the
    class proposition to hold (the constrained labeling); ``alphabet`` defaults
    to the atoms appearing on NBA guards.
    """
    constraints = dict(constraints or {})
    if nba.is_empty():
        raise NoPlanFound("the task automaton has an empty language")
    x0 = Point(*map(float, x0))
    if not ws.in_bounds(x0) or not ws.point_free(x0):
        raise ValueError(f"start {x0} is not collision-free")
    if alphabet is None:
        alphabet = {name for t in nba.transitions for name, _ in t.guard}
    labeler = _Labeler(ws, env0, constraints, alphabet)
    succ = _Succ(nba)
    goals = labeler.goals()

    (q0,) = sorted(nba.initial)[:1]
    prefix = ProductTree(ws, labeler, succ, x0, q0, _child_rng(params.seed, 0), params, goals)
    suffix_trees: list = []  # (root prefix node id, tree, [closing node ids])
    rooted_vertices: set = set()
    stay_roots: list = []

    def consider(nid: int) -> None:
        q = prefix.node_q[nid]
        if q not in nba.accepting:
            return
        v = prefix.node_v[nid]
        if q in succ(q, prefix.vsym[v]):
            stay_roots.append(nid)
            return
        if len(suffix_trees) >= params.k_suffix or (v, q) in rooted_vertices:
            return
        rooted_vertices.add((v, q))
        tree = ProductTree(ws, labeler, succ, prefix.vertex(v), q,
                           _child_rng(params.seed, 1, len(suffix_trees)), params,
                           goals + [prefix.vertex(v)])
        closing: list = []
        suffix_trees.append((nid, tree, closing))
        _collect_closing(tree, [tree.root] + [n for n in range(1, len(tree.node_q))], closing)

    for nid in range(len(prefix.node_q)):
        consider(nid)
    for _ in range(params.n_samples):
        for nid in prefix.extend():
            consider(nid)
        for _, tree, closing in suffix_trees:
            _collect_closing(tree, tree.extend(), closing)

    return _best_plan(prefix, suffix_trees, stay_roots, nba, constraints, labeler)


def _collect_closing(tree: ProductTree, new_nodes: list, closing: list) -> None:
    root_x = tree.vertex(0)
    root_q = tree.node_q[tree.root]
    for nid in new_nodes:
        if nid == tree.root:
            continue
        v = tree.node_v[nid]
        x = tree.vertex(v)
        if root_q not in tree.succ(tree.node_q[nid], tree.vsym[v]):
            continue
        if dist(x, root_x) <= tree.ws.eta + TOL and segment_free(tree.ws, x, root_x):
            closing.append(nid)


def _best_plan(prefix: ProductTree, suffix_trees, stay_roots, nba, constraints, labeler) -> PrefixSuffixPlan:
    best = None  # ((total, suffix cost, order), builder)
    order = 0
    for nid in stay_roots:
        key = (prefix.cost[nid], 0.0, order)
        order += 1
        if best is None or key < best[0]:
            best = (key, (nid, None, None))
    for root, tree, closing in suffix_trees:
        root_x = tree.vertex(0)
        for c in closing:
            s = tree.cost[c] + dist(tree.x_of(c), root_x)
            key = (prefix.cost[root] + s, s, order)
            order += 1
            if best is None or key < best[0]:
                best = (key, (root, tree, c))
    if best is None:
        raise NoPlanFound("no accepting lasso within the sample budget")
    root, tree, c = best[1]

    def node(x, q, cost) -> PlanNode:
        return PlanNode(Point(*x), q, float(cost), labeler.symbol(x), labeler.witnesses(x))

    pre = [node(prefix.x_of(n), prefix.node_q[n], prefix.cost[n]) for n in prefix.path_to(root)]
    head = pre[-1]
    if tree is None:
        suf = [node(head.x, head.q, 0.0), node(head.x, head.q, 0.0)]
    else:
        suf = [node(tree.x_of(n), tree.node_q[n], tree.cost[n]) for n in tree.path_to(c)]
        close = tree.cost[c] + dist(tree.x_of(c), head.x)
        suf.append(node(head.x, head.q, close))
    result = PrefixSuffixPlan(pre, suf, nba, dict(constraints))
    check_plan(result)
    return result


def check_plan(p: PrefixSuffixPlan) -> None:
    """Raise ``AssertionError`` unless ``p`` is a well-formed accepting lasso."""
    nba = p.nba
    first, last = p.suffix[0], p.suffix[-1]
    assert dist(first.x, last.x) <= 1e-9 and first.q == last.q, "suffix does not close"
    assert p.prefix[0].q in nba.initial, "prefix does not start in an initial state"
    assert p.prefix[-1].q in nba.accepting, "prefix does not end in an accepting state"
    assert p.prefix[-1].q == first.q and dist(p.prefix[-1].x, first.x) <= 1e-9
    for seq in (p.prefix, p.suffix):
        for a, b in zip(seq, seq[1:]):
            assert b.q in nba.successors(a.q, a.symbol), f"disabled NBA step {a.q}->{b.q}"
            assert abs(b.cost - a.cost - dist(a.x, b.x)) <= 1e-6, "cost accumulation broken"
    assert accepting_run(nba, p.word()) is not None, "plan word rejected by the automaton"


# ---------------------------------------------------------------------------
# decomposition into goal-reaching subtasks


@dataclass(frozen=True)
class Subtask:
    index: int
    goal_class: str
    goal_constraint: frozenset
    reference_path: tuple
    locate: Point
    target: Point
    target_id: Optional[str]
    nba_edge: tuple
    repeating: bool = False


def _cuts(nodes: list, nba: NBA, lo: int, hi: int) -> list:
    """(index, class) for every discharging step ``j -> j+1`` with ``lo <= j < hi``."""
    out = []
    for j in range(lo, hi):
        a, b = nodes[j], nodes[j + 1]
        if a.q == b.q:
            continue
        guard = nba.guard_of(a.q, b.q, a.symbol)
        goals = [c for c in positive_atoms(guard or frozenset()) if c in a.symbol]
        if goals:
            out.append((j, goals[0]))
    return out


def _held(nodes: list, cls: str, i: int, j: int) -> bool:
    return all(cls in nodes[k].symbol for k in range(i, j + 1))


def _merge(cuts: list, nodes: list, carry: Optional[tuple] = None) -> list:
    """Drop a cut that repeats the previous cut's class while that class never lapsed."""
    out: list = []
    prev = carry
    for j, cls in cuts:
        if prev is not None and prev[1] == cls and _held(nodes, cls, prev[0], j):
            continue
        out.append((j, cls))
        prev = (j, cls)
    return out


def decompose(p: PrefixSuffixPlan, constraint_table: Optional[dict] = None) -> list:
    """Split the plan where its NBA state is discharged by a goal proposition."""
    table = {k: frozenset(v) for k, v in (constraint_table if constraint_table is not None
                                          else p.constraints).items()}
    nodes = p.nodes()
    K = len(p.prefix) - 1
    n_last = len(nodes) - 1
    pre_cuts = _merge(_cuts(nodes, p.nba, 0, K), nodes)
    carry = pre_cuts[-1] if pre_cuts else None
    suf_cuts = _merge(_cuts(nodes, p.nba, K, n_last), nodes, carry)
    if len(suf_cuts) > 1:
        # the loop wraps: a first cut continuing the last one is the same event
        j0, c0 = suf_cuts[0]
        jl, cl = suf_cuts[-1]
        wrap = [k for k in range(jl, n_last + 1)] + [k for k in range(K + 1, j0 + 1)]
        if c0 == cl and all(c0 in nodes[k].symbol for k in wrap):
            suf_cuts = suf_cuts[1:]

    subtasks = []
    start = 0
    for j, cls in pre_cuts + suf_cuts:
        x = nodes[j].x
        wit = [w for w in nodes[j].witnesses if w[0] == cls]
        target = Point(*wit[0][2]) if wit else x
        subtasks.append(Subtask(
            index=len(subtasks),
            goal_class=cls,
            goal_constraint=table.get(cls, frozenset()),
            reference_path=tuple(n.x for n in nodes[start:j + 1]),
            locate=x,
            target=target,
            target_id=wit[0][1] if wit else None,
            nba_edge=(nodes[j].q, nodes[j + 1].q),
            repeating=j >= K,
        ))
        start = j

    run = goal_run(p.nba, subtasks)
    if run is not None:
        subtasks = [
            Subtask(s.index, s.goal_class, s.goal_constraint, s.reference_path, s.locate,
                    s.target, s.target_id, run.edge(s.index), s.repeating)
            for s in subtasks
        ]
    return subtasks


@dataclass(frozen=True)
class GoalRun:
    """Accepting NBA run over the word of subtask goals.

    ``states[i]`` is the state before discharging the ``i``-th goal of the
    unrolled sequence; positions from ``loop_start`` on repeat with period
    ``len(states) - loop_start``.
    """

    states: tuple
    loop_start: int
    n_prefix: int
    n_suffix: int

    def state(self, i: int) -> int:
        if i < len(self.states):
            return self.states[i]
        period = len(self.states) - self.loop_start
        return self.states[self.loop_start + (i - self.loop_start) % period]

    def edge(self, i: int) -> tuple:
        return self.state(i), self.state(i + 1)


def goal_word(subtasks: Sequence[Subtask]) -> LassoWord:
    pre = [{s.goal_class} for s in subtasks if not s.repeating]
    suf = [{s.goal_class} for s in subtasks if s.repeating] or [set()]
    return LassoWord(pre, suf)


def goal_run(nba: NBA, subtasks: Sequence[Subtask]) -> Optional[GoalRun]:
    """Accepting run of ``nba`` on the goal word, or ``None`` if it is rejected."""
    w = goal_word(subtasks)
    found = accepting_run(nba, w)
    if found is None:
        return None
    stem, loop = found
    # unroll the product run so each entry is indexed by its word position
    states = [q for q, _ in stem[:-1]] + [q for q, _ in loop]
    loop_start = len(stem) - 1
    n_pre = sum(1 for s in subtasks if not s.repeating)
    n_suf = len(subtasks) - n_pre
    return GoalRun(tuple(states), loop_start, n_pre, n_suf)


def next_subtask(i: int, n_prefix: int, n_total: int) -> Optional[int]:
    """Index after ``i``, wrapping into the repeating suffix; ``None`` when done."""
    if i + 1 < n_total:
        return i + 1
    if n_total > n_prefix:
        return n_prefix
    return None


# ---------------------------------------------------------------------------


def export_plan(p: PrefixSuffixPlan, subtasks: Sequence[Subtask]) -> str:
    lines = [f"# plan cost prefix={p.cost[0]:.6f} suffix={p.cost[1]:.6f}", "[prefix]"]
    lines += [f"{n.x.x:.6f} {n.x.y:.6f} {n.q} {n.cost:.6f}" for n in p.prefix]
    lines.append("[suffix]")
    lines += [f"{n.x.x:.6f} {n.x.y:.6f} {n.q} {n.cost:.6f}" for n in p.suffix]
    lines.append("[subtasks]")
    for s in subtasks:
        bind = "|".join(sorted(s.goal_constraint)) or "-"
        lines.append(
            f"{s.index} {s.goal_class} {bind} locate={s.locate.x:.6f},{s.locate.y:.6f} "
            f"target={s.target.x:.6f},{s.target.y:.6f} edge={s.nba_edge[0]}->{s.nba_edge[1]} "
            f"{'repeat' if s.repeating else 'once'}"
        )
    return "\n".join(lines) + "\n"
