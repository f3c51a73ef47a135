"""Online execution of a decomposed plan with greedy retargeting and gated progress.

The executive never rebuilds the automaton.  It walks the subtask list,
advancing the automaton state only when a live detection confirms the current
goal, and repairs the motion goal from its knowledge base when the world
disagrees with the prior map.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .locomotion import OMEGA_MAX, Pose
from .ltl import NBA, parse
from .ltl.formula import atoms
from .perception import Belief, CameraModel, Detection, KnowledgeBase, refute_unseen, sense, update_knowledge
from .planner import GoalRun, Subtask, goal_run
from .workspace import TOL, EnvState, Point, Workspace, dist

GATE_CONFIRM = "GateConfirm"
GATE_DECLINE = "GateDecline"
GREEDY_RETARGET = "GreedyRetarget"
GREEDY_SKIP = "GreedySkip"
NBA_ADVANCE = "NbaAdvance"
TASK_COMPLETE = "TaskComplete"
EVENT_KINDS = (GATE_CONFIRM, GATE_DECLINE, GREEDY_RETARGET, GREEDY_SKIP, NBA_ADVANCE, TASK_COMPLETE)

ARRIVED = 1e-6


class TaskBlocked(RuntimeError):
    pass


class UnknownRegion(ValueError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown region {name!r}")


class ConstraintSyntaxError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constrained task text


_CONSTRAINED = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*\^\s*(\{[^{}]*\})?")
_REGION_SEP = re.compile(r"\s*(?:∨|\|\||\||,|\bor\b)\s*")


def strip_constraints(text: str, regions: Optional[Iterable[str]] = None) -> tuple:
    """Split ``class^{R1 ∨ R2}`` atoms into a plain formula and a constraint table.

    Returns ``(formula, table)`` where ``table`` maps every atom to the set of
    regions it is bound to (empty means unconstrained).
    """
    known = None if regions is None else set(regions)
    table: dict = {}

    def repl(m: re.Match) -> str:
        name, body = m.group(1), m.group(2)
        if body is None:
            raise ConstraintSyntaxError(f"'^' after {name!r} must be followed by '{{regions}}'")
        inner = body[1:-1].strip()
        names = [r for r in _REGION_SEP.split(inner) if r] if inner else []
        for r in names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", r):
                raise ConstraintSyntaxError(f"bad region name {r!r}")
            if known is not None and r not in known:
                raise UnknownRegion(r)
        table.setdefault(name, set()).update(names)
        return name

    plain = _CONSTRAINED.sub(repl, text)
    if "^" in plain or "{" in plain or "}" in plain:
        raise ConstraintSyntaxError("stray constraint syntax")
    formula = parse(plain)
    for a in atoms(formula):
        table.setdefault(a, set())
    return formula, {k: frozenset(v) for k, v in table.items()}


# ---------------------------------------------------------------------------
# state and events


class Phase(Enum):
    NAVIGATING = "Navigating"
    EXPLORING = "Exploring"
    DONE = "Done"


@dataclass(frozen=True)
class ExecEvent:
    time: float
    kind: str
    payload: dict

    def to_record(self, digits: int = 6) -> dict:
        return {"time": round(self.time, digits), "kind": self.kind, "payload": _rounded(self.payload, digits)}


def _rounded(v, digits):
    if isinstance(v, float):
        return round(v, digits)
    if isinstance(v, dict):
        return {k: _rounded(x, digits) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_rounded(x, digits) for x in v]
    return v


@dataclass(frozen=True)
class MotionCommand:
    """What locomotion should do this tick: drive to ``goal``, spin, or hold."""

    kind: str  # "goto" | "rotate" | "idle"
    goal: Optional[Point] = None
    rate: float = 0.0


@dataclass
class ExecutiveState:
    subtasks: tuple
    run: GoalRun
    robot: Pose
    q: int
    i: int = 0
    confirmed: int = 0  # confirmations so far, i.e. position in the unrolled goal run
    current_goal: Optional[Point] = None
    goal_id: Optional[str] = None
    phase: Phase = Phase.NAVIGATING
    event_log: list = field(default_factory=list)
    scan: Optional[float] = None  # radians turned in the arrival scan
    explore_queue: list = field(default_factory=list)
    q_history: list = field(default_factory=list)

    @property
    def n_prefix(self) -> int:
        return sum(1 for s in self.subtasks if not s.repeating)

    @property
    def n_suffix(self) -> int:
        return len(self.subtasks) - self.n_prefix

    def subtask_at(self, k: int) -> int:
        """Subtask index of the ``k``-th confirmation."""
        p, s = self.n_prefix, self.n_suffix
        return k if k < p else p + (k - p) % s

    def suffix_loops(self) -> int:
        if self.n_suffix == 0:
            return 0
        return max(0, self.confirmed - self.n_prefix) // self.n_suffix


def _pt(p) -> list:
    return [float(p[0]), float(p[1])]


def candidates(kb: KnowledgeBase, ws: Workspace, sub: Subtask) -> list:
    """Beliefs that could discharge ``sub``: right class, inside its regions."""
    out = []
    for b in kb.of_class(sub.goal_class):
        if sub.goal_constraint and ws.region_of(b.last_position) not in sub.goal_constraint:
            continue
        out.append(b)
    return out


def greedy_check(st: ExecutiveState, kb: KnowledgeBase, ws: Workspace) -> Optional[Belief]:
    """The nearest admissible belief if it is strictly closer than the current goal."""
    sub = st.subtasks[st.i]
    here = st.robot.point
    pool = [b for b in candidates(kb, ws, sub) if b.id != st.goal_id]
    if not pool:
        return None
    best = min(pool, key=lambda b: (dist(here, b.last_position), b.id))
    limit = math.inf if st.current_goal is None else dist(here, st.current_goal)
    return best if dist(here, best.last_position) < limit - TOL else None


def gate_check(st: ExecutiveState, detections: Sequence[Detection], ws: Workspace) -> Optional[Detection]:
    """A live detection that discharges the current subtask, if any."""
    sub = st.subtasks[st.i]
    here = st.robot.point
    ok = [d for d in detections
          if d.class_name == sub.goal_class
          and dist(here, d.measured_position) <= ws.epsilon_sat + TOL
          and (not sub.goal_constraint or ws.region_of(d.measured_position) in sub.goal_constraint)]
    if not ok:
        return None
    return min(ok, key=lambda d: (dist(here, d.measured_position), d.object_id))


def alternative(st: ExecutiveState, kb: KnowledgeBase, ws: Workspace) -> Optional[Belief]:
    """Nearest admissible belief away from the spot just found wanting."""
    here = st.robot.point
    pool = [b for b in candidates(kb, ws, st.subtasks[st.i])
            if dist(here, b.last_position) > ws.epsilon_sat + TOL]
    return min(pool, key=lambda b: (dist(here, b.last_position), b.id)) if pool else None


def greedy_skip(st: ExecutiveState) -> None:
    """Head for the following subtasks' locations while still looking for subtask ``i``."""
    n = len(st.subtasks)
    queue = []
    k = st.confirmed + 1
    for _ in range(n):
        if st.n_suffix == 0 and k >= n:
            break
        j = st.subtask_at(k)
        if j == st.i:
            break
        loc = st.subtasks[j].locate
        if not queue or dist(queue[-1], loc) > TOL:
            queue.append(loc)
        k += 1
    st.phase = Phase.EXPLORING
    st.explore_queue = queue
    st.scan = None


class Executive:
    def __init__(self, ws: Workspace, nba: NBA, subtasks: Sequence[Subtask], kb: KnowledgeBase,
                 cam: CameraModel, start: Pose, rng: np.random.Generator, suffix_loops: int = 2):
        if not subtasks:
            raise ValueError("nothing to execute")
        run = goal_run(nba, subtasks)
        if run is None:
            raise ValueError("subtask goals do not form an accepted word")
        self.ws, self.nba, self.kb, self.cam, self.rng = ws, nba, kb, cam, rng
        self.suffix_loops = suffix_loops
        self.state = ExecutiveState(tuple(subtasks), run, start, run.state(0))
        self.state.q_history.append(self.state.q)
        self._aim(0)

    # -- helpers ------------------------------------------------------------
    def _log(self, t: float, kind: str, **payload) -> None:
        self.state.event_log.append(ExecEvent(t, kind, payload))

    def _aim(self, i: int) -> None:
        st = self.state
        st.i = i
        sub = st.subtasks[i]
        if sub.target_id is not None and sub.target_id in self.kb.beliefs:
            st.goal_id = sub.target_id
            st.current_goal = self.kb.beliefs[sub.target_id].last_position
        else:
            st.goal_id = None
            st.current_goal = sub.target
        st.scan = None

    def _retarget(self, t: float, b: Belief, mode: str) -> None:
        st = self.state
        sub = st.subtasks[st.i]
        self._log(t, GREEDY_RETARGET, index=st.i, goal_class=sub.goal_class, mode=mode,
                  robot=_pt(st.robot.point),
                  previous=None if st.current_goal is None else _pt(st.current_goal),
                  previous_id=st.goal_id, target=_pt(b.last_position), target_id=b.id,
                  region=self.ws.region_of(b.last_position))
        st.current_goal, st.goal_id = b.last_position, b.id
        st.phase = Phase.NAVIGATING
        st.explore_queue = []
        st.scan = None

    def _complete(self) -> bool:
        st = self.state
        if st.n_suffix == 0:
            return st.confirmed >= st.n_prefix
        return st.confirmed >= st.n_prefix + self.suffix_loops * st.n_suffix

    def _confirm(self, t: float, det: Detection) -> None:
        st = self.state
        sub = st.subtasks[st.i]
        self._log(t, GATE_CONFIRM, index=st.i, goal_class=sub.goal_class,
                  position=_pt(det.measured_position), region=self.ws.region_of(det.measured_position),
                  object_id=det.object_id, bind=sorted(sub.goal_constraint))
        q_from, q_to = st.run.edge(st.confirmed)
        self._log(t, NBA_ADVANCE, index=st.i, q_from=q_from, q_to=q_to, label=[sub.goal_class])
        st.q = q_to
        st.q_history.append(q_to)
        st.confirmed += 1
        if self._complete():
            st.phase = Phase.DONE
            self._log(t, TASK_COMPLETE, confirmations=st.confirmed, suffix_loops=st.suffix_loops())
            return
        self._aim(st.subtask_at(st.confirmed))

    # -- one control tick ---------------------------------------------------
    def step(self, env: EnvState, dt: float) -> MotionCommand:
        if dt <= 0:
            raise ValueError("dt must be positive")
        st, ws, kb = self.state, self.ws, self.kb
        t = env.time
        pose = st.robot
        dets = sense(ws, env, (pose.x, pose.y, pose.heading), self.cam, self.rng)
        touched = update_knowledge(kb, dets, t)
        refute_unseen(kb, ws, (pose.x, pose.y, pose.heading), self.cam, touched)
        if st.phase is Phase.DONE:
            return MotionCommand("idle")

        if st.goal_id is not None and st.goal_id in kb.beliefs:
            st.current_goal = kb.beliefs[st.goal_id].last_position

        if st.phase is Phase.NAVIGATING:
            b = greedy_check(st, kb, ws)
            if b is not None:
                self._retarget(t, b, "closer")
        else:
            pool = candidates(kb, ws, st.subtasks[st.i])
            if pool:
                here = pose.point
                self._retarget(t, min(pool, key=lambda b: (dist(here, b.last_position), b.id)), "explore")

        if st.phase is Phase.NAVIGATING:
            here = pose.point
            if dist(here, st.current_goal) <= ws.epsilon_sat + TOL:
                det = gate_check(st, dets, ws)
                if det is not None:
                    self._confirm(t, det)
                    if st.phase is Phase.DONE:
                        return MotionCommand("idle")
                    return MotionCommand("goto", st.current_goal)
                if dist(here, st.current_goal) > ARRIVED:
                    return MotionCommand("goto", st.current_goal)
                if st.scan is None:
                    st.scan = 0.0
                if st.scan < 2.0 * math.pi - 1e-9:
                    st.scan += OMEGA_MAX * dt
                    return MotionCommand("rotate", rate=OMEGA_MAX)
                self._decline(t)
            if st.phase is Phase.NAVIGATING:
                return MotionCommand("goto", st.current_goal)

        # exploring
        while st.explore_queue and dist(pose.point, st.explore_queue[0]) <= ARRIVED:
            st.explore_queue.pop(0)
        if st.explore_queue:
            return MotionCommand("goto", st.explore_queue[0])
        return MotionCommand("rotate", rate=OMEGA_MAX)

    def _decline(self, t: float) -> None:
        st = self.state
        sub = st.subtasks[st.i]
        alt = alternative(st, self.kb, self.ws)
        self._log(t, GATE_DECLINE, index=st.i, goal_class=sub.goal_class,
                  position=_pt(st.current_goal), region=self.ws.region_of(st.current_goal),
                  alternative=None if alt is None else _pt(alt.last_position),
                  alternative_region=None if alt is None else self.ws.region_of(alt.last_position))
        st.scan = None
        if alt is not None:
            st.current_goal, st.goal_id = alt.last_position, alt.id
            return
        greedy_skip(st)
        self._log(t, GREEDY_SKIP, index=st.i, goal_class=sub.goal_class,
                  waypoints=[_pt(p) for p in st.explore_queue])

    def move_to(self, pose: Pose) -> None:
        self.state.robot = pose
