"""Planar workspace: obstacles, named regions, labeled objects and their motion.

Boundary convention: touching an obstacle boundary is free, and regions are
closed sets.  The robot is a point; inflate obstacles in the scenario file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

TOL = 1e-9


class Point(NamedTuple):
    x: float
    y: float


class SamplingExhausted(RuntimeError):
    """Rejection sampling ran out of attempts; free space is empty or tiny."""


def dist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", Point(*map(float, self.center)))
        if self.radius < 0:
            raise ValueError("circle radius must be non-negative")


@dataclass(frozen=True)
class Polygon:
    """Convex polygon with counter-clockwise vertices."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple(Point(float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        n = len(verts)
        for i in range(n):
            a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
            cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
            if cross < -TOL:
                raise ValueError("polygon vertices must be convex and counter-clockwise")

    @classmethod
    def rect(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "Polygon":
        return cls(((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)))

    def contains(self, p: Sequence[float]) -> bool:
        """Closed containment."""
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            if (b.x - a.x) * (p[1] - a.y) - (b.y - a.y) * (p[0] - a.x) < -TOL:
                return False
        return True

    def centroid(self) -> Point:
        xs, ys = zip(*self.vertices)
        return Point(sum(xs) / len(xs), sum(ys) / len(ys))


Shape = Union[Circle, Polygon]


@dataclass(frozen=True, eq=False)
class Workspace:
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    obstacles: tuple = ()
    regions: dict = field(default_factory=dict)
    eta: float = 1.0
    epsilon_sat: float = 0.5

    def __post_init__(self):
        if self.eta <= 0 or self.epsilon_sat <= 0:
            raise ValueError("eta and epsilon_sat must be positive")
        xmin, ymin, xmax, ymax = map(float, self.bounds)
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("empty workspace bounds")
        object.__setattr__(self, "bounds", (xmin, ymin, xmax, ymax))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for name, poly in self.regions.items():
            if not all(self.in_bounds(v) for v in poly.vertices):
                raise ValueError(f"region {name!r} leaves the workspace bounds")
        object.__setattr__(self, "_geom", _ObstacleArrays(self.obstacles))

    def in_bounds(self, p: Sequence[float]) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin - TOL <= p[0] <= xmax + TOL and ymin - TOL <= p[1] <= ymax + TOL

    def point_free(self, p: Sequence[float]) -> bool:
        return self._geom.segment_free(p, p)

    def region_of(self, p: Sequence[float]) -> Optional[str]:
        """Name of the first region (alphabetical) containing ``p``."""
        for name in sorted(self.regions):
            if self.regions[name].contains(p):
                return name
        return None


class _ObstacleArrays:
    """Flattened obstacle geometry for vectorised segment tests."""

    def __init__(self, obstacles: Iterable[Shape]):
        circles = [o for o in obstacles if isinstance(o, Circle)]
        polys = [o for o in obstacles if isinstance(o, Polygon)]
        self.centers = np.array([c.center for c in circles], dtype=float).reshape(-1, 2)
        self.radii = np.array([c.radius for c in circles], dtype=float)
        normals, offsets, verts, starts, vstarts = [], [], [], [], []
        for poly in polys:
            v = np.asarray(poly.vertices, dtype=float)
            edges = np.roll(v, -1, axis=0) - v
            n = np.column_stack([edges[:, 1], -edges[:, 0]])  # outward for CCW
            starts.append(len(normals))
            vstarts.append(len(verts))
            normals.extend(n)
            offsets.extend(np.einsum("ij,ij->i", n, v))
            verts.extend(v)
        self.npoly = len(polys)
        self.normals = np.array(normals, dtype=float).reshape(-1, 2)
        self.offsets = np.array(offsets, dtype=float)
        self.verts = np.array(verts, dtype=float).reshape(-1, 2)
        self.starts = np.array(starts, dtype=int)
        self.vstarts = np.array(vstarts, dtype=int)

    def segment_free(self, a: Sequence[float], b: Sequence[float]) -> bool:
        ax, ay = float(a[0]), float(a[1])
        dx, dy = float(b[0]) - ax, float(b[1]) - ay
        if len(self.radii):
            cx = self.centers[:, 0] - ax
            cy = self.centers[:, 1] - ay
            dd = dx * dx + dy * dy
            t = np.clip((cx * dx + cy * dy) / dd, 0.0, 1.0) if dd > 0 else np.zeros_like(cx)
            gap = np.hypot(cx - t * dx, cy - t * dy)
            if np.any(gap < self.radii - TOL):
                return False
        if self.npoly:
            pa = self.normals[:, 0] * ax + self.normals[:, 1] * ay
            pb = pa + self.normals[:, 0] * dx + self.normals[:, 1] * dy
            separated = np.minimum(pa, pb) >= self.offsets - TOL
            sep_poly = np.logical_or.reduceat(separated, self.starts)
            if dx != 0.0 or dy != 0.0:
                proj = self.verts[:, 0] * -dy + self.verts[:, 1] * dx
                s = ax * -dy + ay * dx
                lo = np.minimum.reduceat(proj, self.vstarts)
                hi = np.maximum.reduceat(proj, self.vstarts)
                scale = math.hypot(dx, dy)
                sep_poly |= (s >= hi - TOL * scale) | (s <= lo + TOL * scale)
            if not np.all(sep_poly):
                return False
        return True


def segment_free(ws: Workspace, a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff the closed segment ab misses every obstacle interior."""
    return ws._geom.segment_free(a, b)


def can_transition(ws: Workspace, a: Sequence[float], b: Sequence[float]) -> bool:
    return dist(a, b) <= ws.eta + TOL and segment_free(ws, a, b)


def sample_free(ws: Workspace, rng: np.random.Generator, max_attempts: int = 10_000) -> Point:
    """Uniform sample over the bounds, rejected against obstacles."""
    xmin, ymin, xmax, ymax = ws.bounds
    for _ in range(max_attempts):
        p = Point(float(rng.uniform(xmin, xmax)), float(rng.uniform(ymin, ymax)))
        if ws.point_free(p):
            return p
    raise SamplingExhausted(f"no free sample after {max_attempts} attempts")


# ---------------------------------------------------------------------------
# objects and the time-varying environment


@dataclass(frozen=True)
class EnvObject:
    """A labeled object.  ``waypoints`` of ``(t, x, y)`` make it move (linear
    interpolation, held at the ends); without them it is static.  ``known``
    marks objects in the robot's prior map and ``present`` those that really
    exist, so a stale prior-map entry is ``known=True, present=False``."""

    id: str
    class_name: str
    position: Point
    waypoints: tuple = ()
    known: bool = True
    present: bool = True

    def __post_init__(self):
        object.__setattr__(self, "position", Point(*map(float, self.position)))
        wps = tuple((float(t), float(x), float(y)) for t, x, y in self.waypoints)
        if any(t1 <= t0 for (t0, _, _), (t1, _, _) in zip(wps, wps[1:])):
            raise ValueError(f"waypoint times of {self.id!r} must be strictly increasing")
        object.__setattr__(self, "waypoints", wps)

    @property
    def dynamic(self) -> bool:
        return bool(self.waypoints)

    def position_at(self, t: float) -> Point:
        wps = self.waypoints
        if not wps:
            return self.position
        if t <= wps[0][0]:
            return Point(wps[0][1], wps[0][2])
        for (t0, x0, y0), (t1, x1, y1) in zip(wps, wps[1:]):
            if t <= t1:
                s = (t - t0) / (t1 - t0)
                return Point(x0 + s * (x1 - x0), y0 + s * (y1 - y0))
        return Point(wps[-1][1], wps[-1][2])

    def at(self, t: float) -> "EnvObject":
        return EnvObject(self.id, self.class_name, self.position_at(t), self.waypoints,
                         self.known, self.present)


@dataclass(frozen=True)
class EnvState:
    time: float
    objects: tuple

    def known_only(self) -> "EnvState":
        return EnvState(self.time, tuple(o for o in self.objects if o.known))

    def present_only(self) -> "EnvState":
        return EnvState(self.time, tuple(o for o in self.objects if o.present))


def env_state(objects: Iterable[EnvObject], t: float) -> EnvState:
    return EnvState(float(t), tuple(o.at(t) for o in objects))


def label_at(ws: Workspace, env: EnvState, x: Sequence[float]) -> frozenset:
    """``(class_name, region or None)`` for every object within epsilon_sat of ``x``."""
    out = set()
    for o in env.objects:
        if dist(x, o.position) <= ws.epsilon_sat + TOL:
            out.add((o.class_name, ws.region_of(o.position)))
    return frozenset(out)


def symbol_of(pairs: Iterable[tuple], constraints: Optional[dict] = None,
              alphabet: Optional[Iterable[str]] = None) -> frozenset:
    """Plain propositions holding under ``constraints`` (class -> allowed regions).

    A class with an empty or missing region set is unconstrained.
    """
    constraints = constraints or {}
    allowed = None if alphabet is None else set(alphabet)
    out = set()
    for cls, region in pairs:
        if allowed is not None and cls not in allowed:
            continue
        regions = constraints.get(cls)
        if not regions or region in regions:
            out.add(cls)
    return frozenset(out)
