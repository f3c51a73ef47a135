"""Simulated camera, the robot's object knowledge base, and point-cloud helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .workspace import TOL, EnvState, Point, Workspace, dist, segment_free


@dataclass(frozen=True)
class CameraModel:
    fov_half_angle: float = 0.6  # radians either side of the heading
    range: float = 5.0
    noise_sigma: float = 0.05

    def __post_init__(self):
        if self.range <= 0 or not 0 < self.fov_half_angle <= math.pi or self.noise_sigma < 0:
            raise ValueError("invalid camera model")


@dataclass(frozen=True)
class Detection:
    class_name: str
    measured_position: Point
    timestamp: float
    object_id: str = ""  # ground truth, for logging only; never used for association


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def in_view(ws: Workspace, pose: Sequence[float], cam: CameraModel, p: Sequence[float],
            margin: float = 1.0) -> bool:
    """Whether ``p`` lies inside the (optionally shrunk) view cone with line of sight."""
    x, y, heading = pose
    d = math.hypot(p[0] - x, p[1] - y)
    if d > cam.range * margin + TOL:
        return False
    if d > TOL:
        off = wrap_angle(math.atan2(p[1] - y, p[0] - x) - heading)
        if abs(off) > cam.fov_half_angle * margin + TOL:
            return False
    return segment_free(ws, (x, y), p)


def sense(ws: Workspace, env: EnvState, pose: Sequence[float], cam: CameraModel,
          rng: np.random.Generator) -> list:
    """Noisy detections of every really present object in view, in environment order."""
    out = []
    for o in env.objects:
        if o.present and in_view(ws, pose, cam, o.position):
            nx, ny = rng.normal(0.0, cam.noise_sigma, 2) if cam.noise_sigma > 0 else (0.0, 0.0)
            out.append(Detection(o.class_name, Point(o.position.x + float(nx), o.position.y + float(ny)),
                                 env.time, o.id))
    return out


# ---------------------------------------------------------------------------
# drift classification


class Drift(Enum):
    JITTER = "jitter"
    DYNAMIC = "dynamic"


class NonMonotoneTimestamps(ValueError):
    pass


def classify_drift(prev: Detection, curr: Detection, speed_threshold: float = 0.3) -> Drift:
    """Dynamic when the implied speed between two detections exceeds the threshold."""
    dt = curr.timestamp - prev.timestamp
    if dt <= 0:
        raise NonMonotoneTimestamps(f"detections at t={prev.timestamp} then t={curr.timestamp}")
    speed = dist(prev.measured_position, curr.measured_position) / dt
    return Drift.DYNAMIC if speed > speed_threshold else Drift.JITTER


# ---------------------------------------------------------------------------
# knowledge base


@dataclass
class Belief:
    id: str
    class_name: str
    last_position: Point
    last_seen: float
    dynamic: bool = False
    anchor: Optional[Detection] = None  # reference detection for drift checks


@dataclass
class KnowledgeBase:
    """What the robot believes about object locations, keyed by belief id."""

    beliefs: dict = field(default_factory=dict)
    association_gate: float = 1.0
    speed_threshold: float = 0.3
    drift_window: float = 1.0
    smoothing: float = 0.5
    _counter: int = 0

    @classmethod
    def from_prior(cls, objects: Iterable, **kw) -> "KnowledgeBase":
        kb = cls(**kw)
        for o in objects:
            kb.beliefs[o.id] = Belief(o.id, o.class_name, Point(*o.position), -math.inf)
        return kb

    def of_class(self, class_name: str) -> list:
        return [b for b in self.beliefs.values() if b.class_name == class_name]

    def new_id(self, class_name: str) -> str:
        while True:
            self._counter += 1
            bid = f"{class_name}#{self._counter}"
            if bid not in self.beliefs:
                return bid

    def copy(self) -> "KnowledgeBase":
        kb = replace(self, beliefs={k: replace(b) for k, b in self.beliefs.items()})
        return kb


def update_knowledge(kb: KnowledgeBase, detections: Sequence[Detection], t: float) -> list:
    """Fold one tick of detections into ``kb`` in place.

    Each detection is matched to the nearest unmatched belief of its class
    within the association gate, otherwise it spawns a new belief.  Returns the
    ids of the beliefs touched this tick.
    """
    touched: list = []
    for det in sorted(detections, key=lambda d: (d.class_name, d.measured_position.x, d.measured_position.y)):
        cands = [b for b in kb.of_class(det.class_name)
                 if b.id not in touched and dist(b.last_position, det.measured_position) <= kb.association_gate + TOL]
        if not cands:
            bid = kb.new_id(det.class_name)
            kb.beliefs[bid] = Belief(bid, det.class_name, det.measured_position, t, anchor=det)
            touched.append(bid)
            continue
        b = min(cands, key=lambda b: (dist(b.last_position, det.measured_position), b.id))
        touched.append(b.id)
        b.last_seen = t
        if b.anchor is None:
            b.last_position, b.anchor = det.measured_position, det
            continue
        if det.timestamp - b.anchor.timestamp >= kb.drift_window - TOL:
            kind = classify_drift(b.anchor, det, kb.speed_threshold)
            b.anchor = det
            if kind is Drift.DYNAMIC:
                b.dynamic = True
        if b.dynamic:
            b.last_position = det.measured_position
        else:
            a = kb.smoothing
            b.last_position = Point((1 - a) * b.last_position.x + a * det.measured_position.x,
                                    (1 - a) * b.last_position.y + a * det.measured_position.y)
    return touched


def surely_visible(ws: Workspace, pose: Sequence[float], cam: CameraModel, p: Sequence[float],
                   slack: float = 0.25) -> bool:
    """Whether every point within ``slack`` of ``p`` is in view with clear sight."""
    x, y, heading = pose
    d = math.hypot(p[0] - x, p[1] - y)
    if d <= slack or d + slack > cam.range:
        return False
    off = abs(wrap_angle(math.atan2(p[1] - y, p[0] - x) - heading))
    if off + math.asin(slack / d) > cam.fov_half_angle:
        return False
    ux, uy = (p[1] - y) / d * slack, -(p[0] - x) / d * slack
    return all(segment_free(ws, (x, y), q) for q in (p, (p[0] + ux, p[1] + uy), (p[0] - ux, p[1] - uy)))


def refute_unseen(kb: KnowledgeBase, ws: Workspace, pose: Sequence[float], cam: CameraModel,
                  touched: Iterable[str], slack: float = 0.25) -> list:
    """Drop beliefs that should be plainly visible but were not detected."""
    seen = set(touched)
    gone = [b.id for b in kb.beliefs.values()
            if b.id not in seen and surely_visible(ws, pose, cam, b.last_position, slack)]
    for bid in gone:
        del kb.beliefs[bid]
    return gone


# ---------------------------------------------------------------------------
# point clouds


class NoHumanPoints(ValueError):
    pass


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (n, 3)
    labels: tuple = ()  # per point, may be empty

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.labels and len(self.labels) != len(pts):
            raise ValueError("one label per point required")

    def __len__(self) -> int:
        return len(self.points)


def parse_point_cloud(text: str) -> PointCloud:
    """Whitespace-separated ``x y z [label]`` lines; ``#`` starts a comment."""
    pts, labels = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (3, 4):
            raise ValueError(f"line {lineno}: expected 'x y z [label]'")
        pts.append([float(v) for v in parts[:3]])
        labels.append(parts[3] if len(parts) == 4 else "")
    return PointCloud(np.array(pts).reshape(-1, 3), tuple(labels) if any(labels) else ())


@dataclass(frozen=True)
class Cluster:
    centroid: tuple
    lower: tuple  # axis-aligned extent
    upper: tuple
    members: tuple  # point indices, ascending


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> tuple:
    """Density clustering.  Returns ``(clusters, noise_indices)``.

    A point is core when at least ``min_pts`` points (itself included) lie
    within ``eps``.  A border point joins the cluster of its nearest core
    point.  Clusters are ordered by centroid, lexicographically.
    """
    if eps <= 0 or min_pts < 1:
        raise ValueError("eps must be positive and min_pts at least 1")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    n = len(pts)
    if n == 0:
        return [], []
    tree = cKDTree(pts)
    hoods = tree.query_ball_point(pts, eps)
    core = np.array([len(h) >= min_pts for h in hoods])
    label = np.full(n, -1)
    k = 0
    for i in np.flatnonzero(core):
        if label[i] >= 0:
            continue
        label[i] = k
        stack = [i]
        while stack:
            j = stack.pop()
            for m in hoods[j]:
                if core[m] and label[m] < 0:
                    label[m] = k
                    stack.append(m)
        k += 1
    for i in np.flatnonzero(~core):
        near = [m for m in hoods[i] if core[m]]
        if near:
            d = np.linalg.norm(pts[near] - pts[i], axis=1)
            label[i] = label[near[int(np.argmin(d))]]
    clusters = []
    for c in range(k):
        idx = np.flatnonzero(label == c)
        sub = pts[idx]
        clusters.append(Cluster(tuple(sub.mean(axis=0).tolist()), tuple(sub.min(axis=0).tolist()),
                                tuple(sub.max(axis=0).tolist()), tuple(idx.tolist())))
    clusters.sort(key=lambda c: c.centroid)
    return clusters, np.flatnonzero(label < 0).tolist()


def cylinder_occupancy(cloud: PointCloud, candidate: Sequence[float], radius: float = 0.2,
                       height: float = 2.0, human_label: str = "human") -> float:
    """Fraction of human-labelled points inside a vertical cylinder at ``candidate``."""
    if not cloud.labels:
        raise NoHumanPoints("point cloud carries no labels")
    mask = np.array([lab == human_label for lab in cloud.labels])
    total = int(mask.sum())
    if total == 0:
        raise NoHumanPoints("no point carries the human label")
    pts = cloud.points[mask]
    r = np.hypot(pts[:, 0] - candidate[0], pts[:, 1] - candidate[1])
    inside = (r <= radius + TOL) & (pts[:, 2] >= -TOL) & (pts[:, 2] <= height + TOL)
    return float(inside.sum()) / total


def best_human_position(cloud: PointCloud, candidates: Sequence[Sequence[float]], **kw) -> Point:
    """Candidate with the highest occupancy; the earliest one wins ties."""
    if not candidates:
        raise ValueError("no candidates")
    scores = [cylinder_occupancy(cloud, c, **kw) for c in candidates]
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return Point(*map(float, candidates[best][:2]))
