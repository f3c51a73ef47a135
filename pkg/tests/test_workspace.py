import math

import numpy as np
import pytest
import shapely.geometry as sg
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ltlnav.workspace import (
    Circle,
    EnvObject,
    Point,
    Polygon,
    SamplingExhausted,
    Workspace,
    can_transition,
    dist,
    env_state,
    label_at,
    sample_free,
    segment_free,
    symbol_of,
)

coord = st.floats(0.0, 10.0, allow_nan=False)
point = st.tuples(coord, coord)


def rooms():
    return Workspace((0, 0, 10, 10),
                     obstacles=(Polygon.rect(4, 2, 6, 8), Circle((2, 8), 1.0),
                                Polygon(((7, 1), (9, 1), (8, 3)))),
                     regions={"Room_A": Polygon.rect(0, 0, 4, 10), "Room_B": Polygon.rect(6, 0, 10, 10)},
                     epsilon_sat=0.5)


def test_dist_is_euclidean():
    assert dist((0, 0), (3, 4)) == 5.0


@given(point, point, point)
def test_dist_metric_axioms(a, b, c):
    assert dist(a, b) == dist(b, a)
    assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-9
    assert dist(a, a) == 0.0


def test_transition_examples():
    ws = Workspace((0, 0, 10, 10), obstacles=(Polygon.rect(4, 0, 4.2, 10),), eta=1.0)
    assert not can_transition(ws, (0, 0), (1.5, 0))
    assert can_transition(ws, (0, 0), (0.5, 0))
    assert not can_transition(ws, (3.8, 5), (4.3, 5))


def test_boundary_touch_is_free():
    ws = Workspace((0, 0, 10, 10), obstacles=(Polygon.rect(4, 4, 6, 6),))
    assert segment_free(ws, (4, 0), (4, 10))
    assert not segment_free(ws, (4.01, 0), (4.01, 10))
    assert ws.point_free((4, 5)) and not ws.point_free((5, 5))


@settings(max_examples=400, deadline=None)
@given(point, point)
def test_segment_free_matches_shapely(a, b):
    ws = rooms()
    seg = sg.LineString([a, b]) if dist(a, b) > 1e-9 else sg.Point(a)
    blocked = False
    ambiguous = False
    for ob in ws.obstacles:
        if isinstance(ob, Circle):
            gap = sg.Point(ob.center).distance(seg)
            blocked |= gap < ob.radius - 1e-6
            ambiguous |= abs(gap - ob.radius) <= 1e-6
        else:
            shape = sg.Polygon(ob.vertices)
            blocked |= seg.intersects(shape.buffer(-1e-6))
            ambiguous |= seg.intersects(shape.buffer(1e-6)) and not seg.intersects(shape.buffer(-1e-6))
    assume(not ambiguous)
    assert segment_free(ws, a, b) == (not blocked)


def test_label_examples():
    ws = Workspace((0, 0, 10, 10), regions={"Room_A": Polygon.rect(0, 0, 3, 3)}, epsilon_sat=0.5)
    nurse = EnvObject("n", "nurse", (1, 1))
    env = env_state([nurse], 0)
    assert label_at(ws, env, (1.2, 1)) == {("nurse", "Room_A")}
    assert label_at(ws, env, (5, 5)) == frozenset()
    two = env_state([EnvObject("c1", "can", (5, 5)), EnvObject("c2", "can", (5.3, 5))], 0)
    assert len(label_at(ws, two, (5.15, 5))) == 1  # same class and region collapse to one pair
    assert symbol_of(label_at(ws, two, (5.15, 5))) == {"can"}


def test_symbol_respects_constraints():
    pairs = {("nurse", "Room_A"), ("doctor", "Room_D")}
    assert symbol_of(pairs, {"nurse": {"Room_A"}, "doctor": {"Room_B"}}) == {"nurse"}
    assert symbol_of(pairs, {"doctor": frozenset()}) == {"nurse", "doctor"}
    assert symbol_of(pairs, alphabet={"doctor"}) == {"doctor"}


def test_sampling_is_reproducible():
    ws = Workspace((0, 0, 1, 1))
    a = [sample_free(ws, np.random.default_rng(4)) for _ in range(3)]
    b = [sample_free(ws, np.random.default_rng(4)) for _ in range(3)]
    assert a == b


def test_sampling_exhausted():
    ws = Workspace((0, 0, 1, 1), obstacles=(Polygon.rect(-1, -1, 2, 2),))
    with pytest.raises(SamplingExhausted):
        sample_free(ws, np.random.default_rng(0), max_attempts=100)


def test_samples_are_free_and_inside():
    ws = rooms()
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        p = sample_free(ws, rng)
        assert ws.in_bounds(p) and segment_free(ws, p, p)


def test_invalid_shapes():
    with pytest.raises(ValueError):
        Polygon(((0, 0), (0, 1), (1, 0)))  # clockwise
    with pytest.raises(ValueError):
        Workspace((0, 0, 1, 1), eta=0)
    with pytest.raises(ValueError):
        Workspace((0, 0, 1, 1), regions={"R": Polygon.rect(0, 0, 2, 2)})
    with pytest.raises(ValueError):
        EnvObject("x", "a", (0, 0), waypoints=((1, 0, 0), (1, 1, 1)))


def test_scripted_motion_interpolates_and_holds():
    o = EnvObject("d", "doctor", (0, 0), waypoints=((2, 0, 0), (4, 2, 0)))
    assert o.position_at(0) == Point(0, 0)
    assert o.position_at(3) == Point(1, 0)
    assert o.position_at(9) == Point(2, 0)


@given(st.floats(0, 10), st.floats(0, 10))
def test_scripted_position_stays_on_path(t0, t1):
    o = EnvObject("d", "doctor", (0, 0), waypoints=((1, 0, 0), (5, 4, 3)))
    p, q = o.position_at(min(t0, t1)), o.position_at(max(t0, t1))
    # straight path, so progress is monotone along it
    assert math.hypot(*q) >= math.hypot(*p) - 1e-12
    assert abs(p.x * 3 - p.y * 4) < 1e-9


def test_region_of_prefers_alphabetical():
    ws = Workspace((0, 0, 4, 4), regions={"B": Polygon.rect(0, 0, 2, 4), "A": Polygon.rect(2, 0, 4, 4)})
    assert ws.region_of((2, 1)) == "A"
    assert ws.region_of((1, 1)) == "B"
