"""Scenario files: YAML documents describing a world, a task and run settings.

Grammar (all sections but ``workspace`` and ``task`` optional)::

    name: str
    workspace:
      bounds: [xmin, ymin, xmax, ymax]
      eta: float                    # max planner step, default 1.0
      epsilon_sat: float            # satisfaction / arrival radius, default 0.5
      obstacles: [shape, ...]
      regions: {name: shape}        # shapes must be convex polygons
    terrain: [{zone: shape, type: Flat|Stairs}, ...]
    objects:
      - {id, class, position: [x, y], known: bool, present: bool,
         path: [[t, x, y], ...]}
    task: constrained LTL text, e.g. "G F cup^{Kitchen}"
    start: {position: [x, y], heading: radians}
    camera: {fov_half_angle, range, noise_sigma}
    perception: {speed_threshold, association_gate, drift_window, smoothing}
    people_classes: [class, ...]
    planner: {n_samples, rewire_gamma, goal_bias, seed, k_suffix}
    sim: {dt, horizon, seed, suffix_loops}

A shape is ``{rect: [xmin, ymin, xmax, ymax]}``, ``{polygon: [[x, y], ...]}``
or ``{circle: {center: [x, y], radius: r}}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .executive import ConstraintSyntaxError, UnknownRegion, strip_constraints
from .locomotion import Terrain
from .ltl import LTLSyntaxError
from .perception import CameraModel
from .planner import PlannerParams
from .workspace import Circle, EnvObject, Point, Polygon, Workspace


class ParseError(ValueError):
    def __init__(self, line: Optional[int], message: str):
        self.line = line
        self.message = message
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class ValidationError(ValueError):
    def __init__(self, field_name: str, reason: str):
        self.field = field_name
        self.reason = reason
        super().__init__(f"{field_name}: {reason}")


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.05
    horizon: float = 300.0
    seed: int = 0
    suffix_loops: int = 2

    @property
    def n_ticks(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    workspace: Workspace
    objects: tuple
    task_text: str
    formula: Any
    constraints: dict
    start: Point
    start_heading: float = 0.0
    terrain: tuple = ()  # (Polygon, Terrain)
    camera: CameraModel = CameraModel()
    perception: dict = field(default_factory=dict)
    people_classes: frozenset = frozenset()
    planner: PlannerParams = PlannerParams()
    sim: SimParams = SimParams()

    def terrain_at(self, p) -> Terrain:
        for zone, kind in self.terrain:
            if zone.contains(p):
                return kind
        return Terrain.FLAT


BUNDLED = ("hospital_1", "hospital_1_static", "hospital_2_gaits", "handover_1",
           "micro_empty", "micro_reach", "micro_loop", "micro_wall", "micro_moved", "micro_constrained")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("ltlnav") / "scenarios" / f"{name}.yaml"))


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file; bare bundled names are accepted too."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(None, f"cannot read {p}: {e}") from e
    return parse_scenario(text, default_name=p.stem)


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(None if mark is None else mark.line + 1, str(getattr(e, "problem", e))) from e
    if not isinstance(doc, dict):
        raise ValidationError("<root>", "expected a mapping")
    return _Builder(doc, default_name).build()


def _num(v, where: str, positive=False, nonneg=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(where, "expected a finite number")
    if positive and v <= 0:
        raise ValidationError(where, "must be positive")
    if nonneg and v < 0:
        raise ValidationError(where, "must be non-negative")
    return float(v)


def _point(v, where: str) -> Point:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ValidationError(where, "expected [x, y]")
    return Point(_num(v[0], where), _num(v[1], where))


def _section(doc: dict, key: str, allowed: set) -> dict:
    sec = doc.get(key) or {}
    if not isinstance(sec, dict):
        raise ValidationError(key, "expected a mapping")
    extra = set(sec) - allowed
    if extra:
        raise ValidationError(f"{key}.{sorted(extra)[0]}", "unknown key")
    return sec


class _Builder:
    def __init__(self, doc: dict, default_name: str):
        self.doc = doc
        self.name = str(doc.get("name", default_name))

    def shape(self, v, where: str, convex_only=False):
        if not isinstance(v, dict) or len(v) != 1:
            raise ValidationError(where, "expected one of rect, polygon, circle")
        (kind, body), = v.items()
        try:
            if kind == "rect":
                if not isinstance(body, list) or len(body) != 4:
                    raise ValidationError(where, "rect needs [xmin, ymin, xmax, ymax]")
                xmin, ymin, xmax, ymax = (_num(b, where) for b in body)
                if not (xmin < xmax and ymin < ymax):
                    raise ValidationError(where, "empty rect")
                return Polygon.rect(xmin, ymin, xmax, ymax)
            if kind == "polygon":
                if not isinstance(body, list):
                    raise ValidationError(where, "polygon needs a vertex list")
                return Polygon(tuple(_point(b, where) for b in body))
            if kind == "circle" and not convex_only:
                if not isinstance(body, dict):
                    raise ValidationError(where, "circle needs center and radius")
                return Circle(_point(body.get("center"), where), _num(body.get("radius"), where, nonneg=True))
        except ValueError as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError(where, str(e)) from e
        raise ValidationError(where, f"unsupported shape {kind!r}")

    def build(self) -> Scenario:
        doc = self.doc
        known_keys = {"name", "workspace", "terrain", "objects", "task", "start", "camera", "perception",
                      "people_classes", "planner", "sim", "description"}
        extra = set(doc) - known_keys
        if extra:
            raise ValidationError(sorted(extra)[0], "unknown key")
        ws = self.workspace()
        objects = self.objects(ws)
        task = doc.get("task")
        if not isinstance(task, str) or not task.strip():
            raise ValidationError("task", "expected constrained LTL text")
        try:
            formula, table = strip_constraints(task, ws.regions)
        except UnknownRegion as e:
            raise ValidationError("task", f"unknown region {e.name!r}") from e
        except (LTLSyntaxError, ConstraintSyntaxError) as e:
            raise ValidationError("task", str(e)) from e

        start_sec = _section(doc, "start", {"position", "heading"})
        if "position" not in start_sec:
            raise ValidationError("start.position", "required")
        start = _point(start_sec["position"], "start.position")
        if not ws.in_bounds(start) or not ws.point_free(start):
            raise ValidationError("start.position", "not in free space")
        heading = _num(start_sec.get("heading", 0.0), "start.heading")

        terrain = []
        for k, z in enumerate(doc.get("terrain") or []):
            where = f"terrain[{k}]"
            if not isinstance(z, dict) or "zone" not in z:
                raise ValidationError(where, "expected {zone, type}")
            try:
                kind = Terrain(z.get("type", "Flat"))
            except ValueError as e:
                raise ValidationError(f"{where}.type", "expected Flat or Stairs") from e
            terrain.append((self.shape(z["zone"], f"{where}.zone", convex_only=True), kind))

        cam_sec = _section(doc, "camera", {"fov_half_angle", "range", "noise_sigma"})
        try:
            camera = CameraModel(**{k: _num(v, f"camera.{k}") for k, v in cam_sec.items()})
        except ValueError as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError("camera", str(e)) from e

        perc = _section(doc, "perception", {"speed_threshold", "association_gate", "drift_window", "smoothing"})
        perc = {k: _num(v, f"perception.{k}", positive=True) for k, v in perc.items()}

        people = doc.get("people_classes", []) or []
        if not isinstance(people, list) or not all(isinstance(c, str) for c in people):
            raise ValidationError("people_classes", "expected a list of class names")

        pl = _section(doc, "planner", {"n_samples", "rewire_gamma", "goal_bias", "seed", "k_suffix"})
        for k in ("n_samples", "seed", "k_suffix"):
            if k in pl and (not isinstance(pl[k], int) or isinstance(pl[k], bool) or pl[k] < 0):
                raise ValidationError(f"planner.{k}", "expected a non-negative integer")
        for k in ("rewire_gamma", "goal_bias"):
            if k in pl:
                pl[k] = _num(pl[k], f"planner.{k}", nonneg=True)
        planner = PlannerParams(**pl)

        sm = _section(doc, "sim", {"dt", "horizon", "seed", "suffix_loops"})
        dt = _num(sm.get("dt", 0.05), "sim.dt", positive=True)
        horizon = _num(sm.get("horizon", 300.0), "sim.horizon", positive=True)
        if horizon < dt:
            raise ValidationError("sim.horizon", "must be at least dt")
        seed = sm.get("seed", 0)
        loops = sm.get("suffix_loops", 2)
        for k, v in (("seed", seed), ("suffix_loops", loops)):
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValidationError(f"sim.{k}", "expected a non-negative integer")
        sim = SimParams(dt, horizon, seed, loops)

        return Scenario(self.name, ws, objects, task, formula, table, start, heading, tuple(terrain),
                        camera, perc, frozenset(people), planner, sim)

    def workspace(self) -> Workspace:
        sec = _section(self.doc, "workspace", {"bounds", "eta", "epsilon_sat", "obstacles", "regions"})
        b = sec.get("bounds")
        if not isinstance(b, list) or len(b) != 4:
            raise ValidationError("workspace.bounds", "expected [xmin, ymin, xmax, ymax]")
        bounds = tuple(_num(v, "workspace.bounds") for v in b)
        obstacles = tuple(self.shape(o, f"workspace.obstacles[{k}]")
                          for k, o in enumerate(sec.get("obstacles") or []))
        regions_raw = sec.get("regions") or {}
        if not isinstance(regions_raw, dict):
            raise ValidationError("workspace.regions", "expected a mapping")
        regions = {str(k): self.shape(v, f"workspace.regions.{k}", convex_only=True)
                   for k, v in regions_raw.items()}
        try:
            return Workspace(bounds, obstacles, regions,
                             eta=_num(sec.get("eta", 1.0), "workspace.eta", positive=True),
                             epsilon_sat=_num(sec.get("epsilon_sat", 0.5), "workspace.epsilon_sat", positive=True))
        except ValueError as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError("workspace", str(e)) from e

    def objects(self, ws: Workspace) -> tuple:
        out, seen = [], set()
        for k, o in enumerate(self.doc.get("objects") or []):
            where = f"objects[{k}]"
            if not isinstance(o, dict):
                raise ValidationError(where, "expected a mapping")
            extra = set(o) - {"id", "class", "position", "known", "present", "path"}
            if extra:
                raise ValidationError(f"{where}.{sorted(extra)[0]}", "unknown key")
            oid = o.get("id")
            if not isinstance(oid, str) or not oid:
                raise ValidationError(f"{where}.id", "required")
            if oid in seen:
                raise ValidationError(f"{where}.id", f"duplicate id {oid!r}")
            seen.add(oid)
            cls = o.get("class")
            if not isinstance(cls, str) or not cls:
                raise ValidationError(f"{where}.class", "required")
            path = o.get("path") or []
            wps = []
            for j, w in enumerate(path):
                if not isinstance(w, list) or len(w) != 3:
                    raise ValidationError(f"{where}.path[{j}]", "expected [t, x, y]")
                wps.append(tuple(_num(v, f"{where}.path[{j}]") for v in w))
            pos = o.get("position")
            if pos is None and wps:
                pos = list(wps[0][1:])
            position = _point(pos, f"{where}.position")
            for key in ("known", "present"):
                if not isinstance(o.get(key, True), bool):
                    raise ValidationError(f"{where}.{key}", "expected true or false")
            try:
                obj = EnvObject(oid, cls, position, tuple(wps), o.get("known", True), o.get("present", True))
            except ValueError as e:
                raise ValidationError(f"{where}.path", str(e)) from e
            for p in [obj.position] + [Point(x, y) for _, x, y in obj.waypoints]:
                if not ws.in_bounds(p):
                    raise ValidationError(f"{where}.position", "outside the workspace bounds")
            out.append(obj)
        return tuple(out)
