"""Gait definitions, contact schedules, gait selection and a kinematic tracker.

Legs are ordered LF, LH, RH, RF throughout.  A leg is in stance while its
phase-shifted cycle position lies in the first ``rho`` of the cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .workspace import Point, Workspace, segment_free

LEGS = ("LF", "LH", "RH", "RF")
OMEGA_MAX = 2.0  # rad/s
ALIGN_TOL = 0.3  # heading error (rad) below which the robot translates
_PHASE_EPS = 1e-9


@dataclass(frozen=True)
class GaitSpec:
    name: str
    rho: float
    t_gait: float
    phases: tuple
    max_speed: float

    def __post_init__(self):
        if not 0 < self.rho < 1 or self.t_gait <= 0 or self.max_speed <= 0:
            raise ValueError(f"invalid gait {self.name!r}")
        if len(self.phases) != 4 or not all(0 <= p < 1 for p in self.phases):
            raise ValueError("four relative phases in [0, 1) required")


TROT = GaitSpec("Trot", 0.5, 0.6, (0.0, 0.5, 0.0, 0.5), 0.8)
WALK = GaitSpec("Walk", 0.75, 1.2, (0.0, 0.75, 0.25, 0.5), 0.3)
GAITS = {g.name: g for g in (TROT, WALK)}


def _cycle_pos(g: GaitSpec, t: float, phase: float) -> float:
    u = (t / g.t_gait - phase) % 1.0
    # snap float noise so that boundaries land on the right side
    r = round(u)
    if abs(u - r) < _PHASE_EPS:
        u = 0.0
    return u


def contact_state(g: GaitSpec, t: float) -> tuple:
    """Stance flags for (LF, LH, RH, RF) at time ``t``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    return tuple(_cycle_pos(g, t, p) < g.rho - _PHASE_EPS for p in g.phases)


@dataclass(frozen=True)
class ContactSchedule:
    gait: GaitSpec
    t0: float
    horizon: float
    stance: tuple  # per leg: tuple of (t_on, t_off)

    def as_text(self) -> str:
        lines = [f"gait {self.gait.name} t0 {self.t0:.6f} horizon {self.horizon:.6f}"]
        for leg, ivs in zip(LEGS, self.stance):
            lines.append(leg + " " + " ".join(f"[{a:.6f},{b:.6f})" for a, b in ivs))
        return "\n".join(lines) + "\n"


def build_schedule(g: GaitSpec, t0: float, horizon: float) -> ContactSchedule:
    """Stance intervals ``[t_on, t_off)`` of each leg, clipped to ``[t0, t0 + horizon)``."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    t1 = t0 + horizon
    legs = []
    for p in g.phases:
        ivs = []
        k = math.floor(t0 / g.t_gait - p) - 1
        while True:
            on = (k + p) * g.t_gait
            if on >= t1:
                break
            off = on + g.rho * g.t_gait
            a, b = max(on, t0), min(off, t1)
            if b - a > 1e-12:
                ivs.append((a, b))
            k += 1
        legs.append(tuple(ivs))
    return ContactSchedule(g, t0, horizon, tuple(legs))


# ---------------------------------------------------------------------------
# scene-driven gait choice


class Terrain(Enum):
    FLAT = "Flat"
    STAIRS = "Stairs"


class People(Enum):
    NONE = "NoPeople"
    STATIC = "StaticPerson"
    MOVING = "MovingPeople"


@dataclass(frozen=True)
class SceneContext:
    terrain: Terrain = Terrain.FLAT
    people: People = People.NONE


def select_gait(ctx: SceneContext) -> GaitSpec:
    if ctx.terrain is Terrain.STAIRS or ctx.people is People.STATIC:
        return WALK
    return TROT


def people_context(n_static: int, n_moving: int) -> People:
    """A static person in view calls for care unless a crowd is moving about."""
    if n_moving >= 2 or (n_moving and not n_static):
        return People.MOVING
    if n_static:
        return People.STATIC
    return People.NONE


class GaitScheduler:
    """Holds the active gait; a requested switch lands on the next cycle boundary."""

    def __init__(self, gait: GaitSpec = TROT, t0: float = 0.0):
        self.gait = gait
        self.cycle_start = t0
        self.pending: Optional[GaitSpec] = None

    def update(self, t: float, wanted: GaitSpec) -> GaitSpec:
        while t >= self.cycle_start + self.gait.t_gait - 1e-9:
            self.cycle_start += self.gait.t_gait
            if self.pending is not None:
                self.gait, self.pending = self.pending, None
        self.pending = None if wanted == self.gait else wanted
        return self.gait


# ---------------------------------------------------------------------------
# stability


FOOT_LENGTH = 0.36
FOOT_WIDTH = 0.30


def nominal_feet(com: Sequence[float] = (0.0, 0.0), heading: float = 0.0) -> tuple:
    """Foot positions (LF, LH, RH, RF) on the nominal stance rectangle."""
    hx, hy = FOOT_LENGTH / 2, FOOT_WIDTH / 2
    c, s = math.cos(heading), math.sin(heading)
    local = ((hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy))
    return tuple(Point(com[0] + c * x - s * y, com[1] + s * x + c * y) for x, y in local)


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _hull(points: np.ndarray) -> np.ndarray:
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return np.array(pts)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(np.subtract(out[-1], out[-2]), np.subtract(p, out[-2])) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = half(pts), half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def _seg_dist(p, a, b) -> float:
    ab = b - a
    L = float(ab @ ab)
    t = 0.0 if L == 0 else min(1.0, max(0.0, float((p - a) @ ab) / L))
    return float(np.linalg.norm(p - (a + t * ab)))


def static_stability(contact: Sequence[bool], feet: Sequence[Sequence[float]], com: Sequence[float],
                     tol: float = 1e-6) -> bool:
    """CoM projection inside the closed support polygon of the stance feet."""
    stance = np.array([f for f, c in zip(feet, contact) if c], dtype=float).reshape(-1, 2)
    if len(stance) == 0:
        raise ValueError("at least one stance leg required")
    p = np.asarray(com, dtype=float)
    hull = _hull(stance)
    if len(hull) == 1:
        return float(np.linalg.norm(p - hull[0])) <= tol
    if len(hull) == 2:
        return _seg_dist(p, hull[0], hull[1]) <= tol
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        if _cross(b - a, p - a) < -tol * np.linalg.norm(b - a):
            return False
    return True


# ---------------------------------------------------------------------------
# kinematic tracking


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float

    @property
    def point(self) -> Point:
        return Point(self.x, self.y)


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def rotate(pose: Pose, rate: float, dt: float) -> Pose:
    return Pose(pose.x, pose.y, _wrap(pose.heading + rate * dt))


def track(goal: Sequence[float], pose: Pose, gait: GaitSpec, dt: float,
          ws: Optional[Workspace] = None, omega_max: float = OMEGA_MAX) -> Pose:
    """One unicycle step toward ``goal``: turn first, then drive straight at it.

    With ``ws`` given, a step that would cross an obstacle is rejected and
    only the turn is kept.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    dx, dy = goal[0] - pose.x, goal[1] - pose.y
    d = math.hypot(dx, dy)
    if d < 1e-12:
        return pose
    err = _wrap(math.atan2(dy, dx) - pose.heading)
    turn = max(-omega_max * dt, min(omega_max * dt, err))
    heading = _wrap(pose.heading + turn)
    if abs(err - turn) > ALIGN_TOL:
        return Pose(pose.x, pose.y, heading)
    step = min(gait.max_speed * dt, d)
    if step == d:
        nx, ny = float(goal[0]), float(goal[1])
    else:
        nx, ny = pose.x + dx / d * step, pose.y + dy / d * step
    if ws is not None and not segment_free(ws, (pose.x, pose.y), (nx, ny)):
        return Pose(pose.x, pose.y, heading)
    return Pose(nx, ny, heading)
