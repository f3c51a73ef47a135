"""Static SVG figures of a run: overhead map and gait timeline.

Output is byte-stable: fixed hash salt and no date metadata.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Circle as CirclePatch, Polygon as PolygonPatch  # noqa: E402

from .locomotion import GAITS, LEGS, build_schedule  # noqa: E402
from .workspace import Circle  # noqa: E402

GAIT_COLORS = {"Trot": "tab:blue", "Walk": "tab:orange"}
EVENT_MARKERS = {"GateConfirm": ("o", "tab:green"), "GateDecline": ("x", "tab:red"),
                 "GreedyRetarget": ("^", "tab:purple"), "GreedySkip": ("s", "tab:brown")}


def _svg(fig) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "ltlnav", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def overhead_svg(trace) -> str:
    sc = trace.scenario
    ws = sc.workspace
    fig, ax = plt.subplots(figsize=(8, 8 * (ws.bounds[3] - ws.bounds[1]) / (ws.bounds[2] - ws.bounds[0]) + 0.5))
    for name in sorted(ws.regions):
        poly = ws.regions[name]
        ax.add_patch(PolygonPatch(poly.vertices, closed=True, facecolor="0.95", edgecolor="0.7", lw=0.5))
        c = poly.centroid()
        ax.text(c.x, c.y, name, ha="center", va="center", fontsize=7, color="0.5")
    for zone, kind in sc.terrain:
        ax.add_patch(PolygonPatch(zone.vertices, closed=True, facecolor="khaki", alpha=0.5, hatch="//"))
    for ob in ws.obstacles:
        if isinstance(ob, Circle):
            ax.add_patch(CirclePatch(ob.center, ob.radius, color="0.3"))
        else:
            ax.add_patch(PolygonPatch(ob.vertices, closed=True, color="0.3"))
    for o in sc.objects:
        pts = [o.position] if not o.waypoints else [(x, y) for _, x, y in o.waypoints]
        xs, ys = zip(*pts)
        style = dict(marker="*", ms=9) if o.present else dict(marker="*", ms=9, mfc="none")
        ax.plot(xs, ys, ls=":" if len(pts) > 1 else "", color="tab:gray", **style)
        ax.annotate(o.id, pts[-1], fontsize=6, xytext=(3, 3), textcoords="offset points")
    runs: list = []
    for k in trace.ticks:
        if not runs or runs[-1][0] != k.gait:
            start = [runs[-1][1][-1]] if runs else []
            runs.append((k.gait, start))
        runs[-1][1].append((k.x, k.y))
    for gait, pts in runs:
        xs, ys = zip(*pts)
        ax.plot(xs, ys, color=GAIT_COLORS.get(gait, "k"), lw=1.2)
    for e in trace.events:
        p = e.payload.get("position") or e.payload.get("robot")
        if e.kind in EVENT_MARKERS and p:
            m, c = EVENT_MARKERS[e.kind]
            ax.plot([p[0]], [p[1]], marker=m, color=c, ms=7, ls="")
    ax.set_xlim(ws.bounds[0], ws.bounds[2])
    ax.set_ylim(ws.bounds[1], ws.bounds[3])
    ax.set_aspect("equal")
    ax.set_title(f"{sc.name}: {trace.status}", fontsize=9)
    return _svg(fig)


def gait_svg(trace, window: float = 2.4) -> str:
    """Contact timeline of the first ``window`` seconds of each gait segment used."""
    segs = trace.gait_segments()
    used = []
    for a, b, g in segs:
        if g not in [u[2] for u in used]:
            used.append((a, min(b, a + window), g))
    fig, axes = plt.subplots(max(1, len(used)), 1, figsize=(7, 1.6 * max(1, len(used))), squeeze=False)
    for ax, (a, b, g) in zip(axes[:, 0], used):
        sched = build_schedule(GAITS[g], a, max(b - a, 1e-3))
        for row, (leg, ivs) in enumerate(zip(LEGS, sched.stance)):
            ax.broken_barh([(s, e - s) for s, e in ivs], (row - 0.4, 0.8), color=GAIT_COLORS.get(g, "k"))
        ax.set_yticks(range(4), LEGS)
        ax.set_xlim(a, max(b, a + 1e-3))
        ax.set_title(f"{g} from t={a:.2f} s", fontsize=8)
    fig.tight_layout()
    return _svg(fig)
