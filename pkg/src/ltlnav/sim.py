"""Fixed-step simulation: plan offline, then tick executive, gait choice and tracking."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .executive import Executive, MotionCommand, Phase
from .locomotion import GaitScheduler, Pose, SceneContext, TROT, people_context, rotate, select_gait, track
from .ltl import translate
from .navigation import Navigator, RouteFollower
from .perception import KnowledgeBase
from .planner import NoPlanFound, PlannerParams, PrefixSuffixPlan, decompose, plan
from .scenario import Scenario
from .workspace import env_state

COMPLETED = "Completed"
BLOCKED = "Blocked"
HORIZON = "HorizonReached"
NO_PLAN = "NoPlanFound"


@dataclass(frozen=True)
class Tick:
    t: float
    x: float
    y: float
    heading: float
    gait: str
    q: int


@dataclass
class RunTrace:
    scenario: Scenario
    status: str
    ticks: list = field(default_factory=list)
    events: list = field(default_factory=list)
    plan: Optional[PrefixSuffixPlan] = None
    subtasks: tuple = ()
    nba: object = None
    q_history: list = field(default_factory=list)
    message: str = ""

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e.to_record(), sort_keys=True) + "\n" for e in self.events)

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "heading", "gait", "q"])
        for k in self.ticks:
            w.writerow([f"{k.t:.4f}", f"{k.x:.6f}", f"{k.y:.6f}", f"{k.heading:.6f}", k.gait, k.q])
        return buf.getvalue()

    def gait_segments(self) -> list:
        """``(t_start, t_end, gait name)`` runs of constant gait."""
        out = []
        for k in self.ticks:
            if out and out[-1][2] == k.gait:
                out[-1][1] = k.t
            else:
                out.append([k.t, k.t, k.gait])
        dt = self.scenario.sim.dt
        return [(a, b + dt, g) for a, b, g in out]


def offline(sc: Scenario, params: Optional[PlannerParams] = None):
    """Translate the task, plan on the prior map and split the plan into subtasks."""
    nba = translate(sc.formula)
    env0 = env_state(sc.objects, 0.0).known_only()
    p = plan(sc.workspace, env0, nba, sc.start, params or sc.planner, constraints=sc.constraints,
             alphabet=set(sc.constraints))
    return nba, p, decompose(p, sc.constraints)


def scene_context(sc: Scenario, kb: KnowledgeBase, pose: Pose) -> SceneContext:
    ws = sc.workspace
    here = pose.point
    room = ws.region_of(here)
    n_static = n_moving = 0
    for b in kb.beliefs.values():
        if b.class_name not in sc.people_classes:
            continue
        if room is not None:
            if ws.region_of(b.last_position) != room:
                continue
        elif math.dist(here, b.last_position) > sc.camera.range:
            continue
        if b.dynamic:
            n_moving += 1
        else:
            n_static += 1
    return SceneContext(sc.terrain_at(here), people_context(n_static, n_moving))


def run(sc: Scenario, seed: Optional[int] = None, n_samples: Optional[int] = None) -> RunTrace:
    """Simulate ``sc`` for its whole horizon.  Deterministic given the seed."""
    params = sc.planner
    if seed is not None:
        params = replace(params, seed=seed)
        sc = replace(sc, sim=replace(sc.sim, seed=seed))
    if n_samples is not None:
        params = replace(params, n_samples=n_samples)
    try:
        nba, p, subtasks = offline(sc, params)
    except NoPlanFound as e:
        return RunTrace(sc, NO_PLAN, message=str(e))

    ws = sc.workspace
    rng = np.random.default_rng(np.random.SeedSequence([sc.sim.seed, 7]))
    kb = KnowledgeBase.from_prior((o for o in env_state(sc.objects, 0.0).objects if o.known), **sc.perception)
    pose = Pose(sc.start.x, sc.start.y, sc.start_heading)
    trace = RunTrace(sc, HORIZON, plan=p, subtasks=tuple(subtasks), nba=nba)
    ex = Executive(ws, nba, subtasks, kb, sc.camera, pose, rng, sc.sim.suffix_loops) if subtasks else None
    follower = RouteFollower(Navigator(ws))
    gaits = GaitScheduler(TROT, 0.0)
    dt = sc.sim.dt
    q = p.prefix[0].q if ex is None else ex.state.q

    for n in range(sc.sim.n_ticks):
        t = n * dt
        env = env_state(sc.objects, t)
        cmd = MotionCommand("idle") if ex is None else ex.step(env, dt)
        if ex is not None:
            q = ex.state.q
        gait = gaits.update(t, select_gait(scene_context(sc, kb, pose)))
        trace.ticks.append(Tick(t, pose.x, pose.y, pose.heading, gait.name, q))
        if cmd.kind == "goto":
            pose = track(follower.waypoint(pose.point, cmd.goal), pose, gait, dt, ws)
        elif cmd.kind == "rotate":
            pose = rotate(pose, cmd.rate, dt)
        if ex is not None:
            ex.move_to(pose)

    if ex is None:
        trace.status = COMPLETED
        trace.q_history = [q]
        return trace
    st = ex.state
    trace.events = list(st.event_log)
    trace.q_history = list(st.q_history)
    if st.phase is Phase.DONE:
        trace.status = COMPLETED
    elif st.phase is Phase.EXPLORING:
        trace.status = BLOCKED
    return trace


# ---------------------------------------------------------------------------
# export

FORMATS = ("csv", "events", "plot", "gait")


def export(trace: RunTrace, out_dir, formats: Iterable[str] = FORMATS) -> list:
    """Write the requested artefacts; returns the paths written."""
    formats = list(formats)
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ValueError(f"unknown export format {bad[0]!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        written.append(_write(out / "trajectory.csv", trace.trajectory_csv()))
    if "events" in formats:
        written.append(_write(out / "events.jsonl", trace.events_jsonl()))
    if "plot" in formats:
        from .plots import overhead_svg

        written.append(_write(out / "overhead.svg", overhead_svg(trace)))
    if "gait" in formats:
        from .plots import gait_svg

        written.append(_write(out / "gait.svg", gait_svg(trace)))
    return written


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path
