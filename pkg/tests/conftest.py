import functools
import random

import pytest

from ltlnav import sim
from ltlnav.ltl import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Eventually,
    Implies,
    LassoWord,
    Next,
    Not,
    Or,
    Release,
    Until,
)
from ltlnav.scenario import load_scenario

AP = ("a", "b", "c")

_UNARY = (Not, Next, Eventually, Always)
_BINARY = (And, Or, Implies, Until, Release)


def random_formula(rng: random.Random, depth: int = 4, ap=AP):
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.08:
            return TRUE
        if r < 0.14:
            return FALSE
        return Atom(rng.choice(ap))
    if rng.random() < 0.45:
        return rng.choice(_UNARY)(random_formula(rng, depth - 1, ap))
    op = rng.choice(_BINARY)
    return op(random_formula(rng, depth - 1, ap), random_formula(rng, depth - 1, ap))


def random_symbol(rng: random.Random, ap=AP) -> set:
    return {x for x in ap if rng.random() < 0.5}


def random_lasso(rng: random.Random, ap=AP, max_prefix: int = 4, max_cycle: int = 3) -> LassoWord:
    return LassoWord([random_symbol(rng, ap) for _ in range(rng.randint(0, max_prefix))],
                     [random_symbol(rng, ap) for _ in range(rng.randint(1, max_cycle))])


@functools.lru_cache(maxsize=None)
def cached_run(name: str, seed=None):
    """One simulation per (scenario, seed) for the whole session."""
    return sim.run(load_scenario(name), seed=seed)


@pytest.fixture(scope="session")
def hospital_trace():
    return cached_run("hospital_1")


@pytest.fixture(scope="session")
def handover_trace():
    return cached_run("handover_1")


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def assert_sound_plan(p, ws, env0, constraints=None, alphabet=None):
    """Independent soundness check of a prefix-suffix plan.

    Steps are feasible transitions, each node's label is recomputed from the
    prior map, every automaton step is enabled, the loop closes in the same
    product state and the label word is accepted.
    """
    from ltlnav.ltl import accepts_lasso
    from ltlnav.workspace import can_transition, label_at, symbol_of

    nba = p.nba
    if alphabet is None:
        alphabet = {name for t in nba.transitions for name, _ in t.guard}
    assert p.prefix[0].q in nba.initial
    for seq in (p.prefix, p.suffix):
        for a, b in zip(seq, seq[1:]):
            assert can_transition(ws, a.x, b.x)
            assert b.q in nba.successors(a.q, a.symbol)
    for n in p.prefix + p.suffix:
        assert n.symbol == symbol_of(label_at(ws, env0, n.x), constraints or {}, alphabet)
    # loop closure: q^K = q^{K+M} at the same position
    assert p.prefix[-1].x == p.suffix[0].x == p.suffix[-1].x
    assert p.prefix[-1].q == p.suffix[0].q == p.suffix[-1].q
    assert p.suffix[0].q in nba.accepting
    assert accepts_lasso(nba, p.word())
