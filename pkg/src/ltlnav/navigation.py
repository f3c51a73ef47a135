"""Collision-free local routes between arbitrary free points.

A visibility graph over obstacle corners pushed slightly outward; queries
connect the start and goal to every visible corner and run Dijkstra.
"""

from __future__ import annotations

import heapq
import math
from typing import Optional, Sequence

import numpy as np

from .workspace import Circle, Point, Polygon, Workspace, dist, segment_free


def _corner_points(ws: Workspace, clearance: float) -> list:
    pts = []
    for ob in ws.obstacles:
        if isinstance(ob, Polygon):
            v = np.asarray(ob.vertices)
            n = len(v)
            for i in range(n):
                e_in = v[i] - v[i - 1]
                e_out = v[(i + 1) % n] - v[i]
                n1 = np.array([e_in[1], -e_in[0]]) / np.linalg.norm(e_in)
                n2 = np.array([e_out[1], -e_out[0]]) / np.linalg.norm(e_out)
                # the point at distance ``clearance`` from both edge lines
                p = v[i] + clearance * (n1 + n2) / (1.0 + float(n1 @ n2))
                pts.append(Point(float(p[0]), float(p[1])))
        elif isinstance(ob, Circle):
            r = (ob.radius + clearance) / math.cos(math.pi / 8)
            for k in range(8):
                a = k * math.pi / 4
                pts.append(Point(ob.center.x + r * math.cos(a), ob.center.y + r * math.sin(a)))
    return [p for p in pts if ws.in_bounds(p) and ws.point_free(p)]


class Navigator:
    def __init__(self, ws: Workspace, clearance: float = 0.1):
        self.ws = ws
        self.nodes = _corner_points(ws, clearance)
        n = len(self.nodes)
        self.adj: list = [[] for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if segment_free(ws, self.nodes[i], self.nodes[j]):
                    d = dist(self.nodes[i], self.nodes[j])
                    self.adj[i].append((j, d))
                    self.adj[j].append((i, d))

    def route(self, start: Sequence[float], goal: Sequence[float]) -> Optional[list]:
        """Shortest corner-to-corner polyline from ``start`` to ``goal`` (both included)."""
        start, goal = Point(*start), Point(*goal)
        if segment_free(self.ws, start, goal):
            return [start, goal]
        n = len(self.nodes)
        to_goal = {i: dist(p, goal) for i, p in enumerate(self.nodes) if segment_free(self.ws, p, goal)}
        best = [math.inf] * n
        prev: list = [None] * n
        heap = []
        for i, p in enumerate(self.nodes):
            if segment_free(self.ws, start, p):
                best[i] = dist(start, p)
                heap.append((best[i], i))
        heapq.heapify(heap)
        done = [False] * n
        best_total, best_last = math.inf, None
        while heap:
            c, i = heapq.heappop(heap)
            if done[i] or c > best[i]:
                continue
            done[i] = True
            if c >= best_total:
                break
            if i in to_goal and c + to_goal[i] < best_total:
                best_total, best_last = c + to_goal[i], i
            for j, d in self.adj[i]:
                if c + d < best[j]:
                    best[j] = c + d
                    prev[j] = i
                    heapq.heappush(heap, (best[j], j))
        if best_last is None:
            return None
        path = [goal]
        i = best_last
        while i is not None:
            path.append(self.nodes[i])
            i = prev[i]
        path.append(start)
        path.reverse()
        return path


class RouteFollower:
    """Caches a route to the current goal and hands out the next waypoint."""

    def __init__(self, nav: Navigator, regoal: float = 0.2):
        self.nav = nav
        self.regoal = regoal
        self.goal: Optional[Point] = None
        self.route: list = []

    def waypoint(self, here: Sequence[float], goal: Sequence[float]) -> Point:
        ws = self.nav.ws
        here, goal = Point(*here), Point(*goal)
        if segment_free(ws, here, goal):
            self.goal, self.route = goal, []
            return goal
        if self.goal is None or dist(goal, self.goal) > self.regoal or not self.route:
            self._replan(here, goal)
        while len(self.route) > 1 and dist(here, self.route[0]) <= 1e-6:
            self.route.pop(0)
        if not self.route:
            return goal
        nxt = self.route[0]
        if len(self.route) == 1:
            nxt = goal
        if not segment_free(ws, here, nxt):
            self._replan(here, goal)
            nxt = self.route[0] if self.route else goal
        return nxt

    def _replan(self, here: Point, goal: Point) -> None:
        path = self.nav.route(here, goal)
        self.goal = goal
        self.route = [] if path is None else path[1:]
