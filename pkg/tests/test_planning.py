import random
from collections import deque
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from aggplan.multizeno import shuttle_plan
from aggplan.planning import (
    INF,
    Atom,
    Plan,
    PlanError,
    Step,
    at,
    compress,
    earliest_times,
    empty,
    in_,
    mutex,
    mutex_free,
    progress,
    validate_plan,
)


def random_walk(task, rng, length):
    """A sequentially valid action list from the initial state."""
    ct = task.compiled
    state = ct.mask(task.initial)
    out = []
    for _ in range(length):
        app = [k for k in ct.applicable(state) if ct.apply(state, k) != state]
        if not app:
            break
        k = rng.choice(app)
        state = ct.apply(state, k)
        out.append(task.actions[k])
    return out


def pairwise_compress(actions):
    """Quadratic oracle: start after every earlier interfering action ends."""
    zero = Fraction(0)
    steps = []
    for j, b in enumerate(actions):
        tb = b.add | b.delete
        t = zero
        for i in range(j):
            a = actions[i]
            ta = a.add | a.delete
            if tb & (a.pre | ta) or ta & b.pre or set(a.objects) & set(b.objects):
                t = max(t, steps[i].end)
        steps.append(Step(b, t))
    return steps


def test_atom_text_round_trip():
    a = at("P1", "city0")
    assert str(a) == "at(P1,city0)"
    assert Atom.parse("at(P1,city0)") == a
    assert Atom.parse(" in(P2, A1) ") == in_("P2", "A1")


def test_shuttle_plans_validate(zeno3):
    v = validate_plan(zeno3, shuttle_plan(zeno3, via=1))
    assert v.valid and (v.makespan, v.cost) == (8, 12)
    v = validate_plan(zeno3, shuttle_plan(zeno3, via=3))
    assert v.valid and (v.makespan, v.cost) == (24, 4)


def test_validate_reports_precondition_and_goal(zeno3):
    fly = zeno3.action("fly(A1,city0,city1)")
    board = zeno3.action("board(P1,A1,city1)")
    v = validate_plan(zeno3, Plan((Step(fly, 0), Step(board, 1))))
    assert not v.valid
    assert any("board(P1,A1,city1)" in s and "precondition" in s for s in v.violations)
    v = validate_plan(zeno3, Plan((Step(fly, 0),)))
    assert any("goal" in s for s in v.violations)


def test_plane_cannot_fly_twice_at_once(zeno3):
    a = zeno3.action("fly(A1,city0,city1)")
    b = zeno3.action("fly(A1,city1,city4)")
    assert not validate_plan(zeno3, Plan((Step(a, 0), Step(b, 1))), goal=()).valid
    assert validate_plan(zeno3, Plan((Step(a, 0), Step(b, 2))), goal=()).valid


def test_negative_start_rejected(zeno3):
    with pytest.raises(PlanError):
        Plan((Step(zeno3.actions[0], -1),))


def test_progress_rejects_inapplicable(zeno3):
    with pytest.raises(PlanError):
        progress(zeno3, None, [zeno3.action("fly(A1,city1,city4)")])


def test_compress_sequential_shuttle(zeno3):
    seq = Plan.sequential(shuttle_plan(zeno3, via=1).actions)
    assert seq.makespan > 8
    c = compress(zeno3, [seq])
    assert c.makespan == 8 and c.cost == 12
    assert validate_plan(zeno3, c).valid


def test_compress_matches_pairwise_oracle(zeno3, zeno6):
    rng = random.Random(7)
    for task in (zeno3, zeno6):
        for _ in range(150):
            acts = random_walk(task, rng, rng.randint(0, 40))
            cut = rng.randint(0, len(acts))
            plan = compress(task, [Plan.sequential(acts[:cut]), Plan.sequential(acts[cut:])])
            oracle = pairwise_compress(acts)
            assert sorted((s.start, s.action.name) for s in plan.steps) == sorted(
                (s.start, s.action.name) for s in oracle
            )
            assert plan.makespan == max((s.end for s in oracle), default=0)
            assert validate_plan(task, plan, goal=()).valid


def test_compress_never_longer_than_sequential(zeno3):
    rng = random.Random(3)
    for _ in range(100):
        acts = random_walk(zeno3, rng, 30)
        assert compress(zeno3, [Plan.sequential(acts)]).makespan <= Plan.sequential(acts).makespan


def reachable_states(task):
    ct = task.compiled
    start = ct.mask(task.initial)
    seen = {start}
    todo = deque([start])
    while todo:
        s = todo.popleft()
        for k in ct.applicable(s):
            n = ct.apply(s, k)
            if n not in seen:
                seen.add(n)
                todo.append(n)
    return seen


def test_mutex_sound_on_reachable_states(zeno3):
    ct = zeno3.compiled
    states = reachable_states(zeno3)
    assert len(states) > 1000
    pairs = [(a, b) for a in zeno3.atoms for b in zeno3.atoms if a < b and mutex(zeno3, a, b)]
    masks = [(ct.mask([a, b])) for a, b in pairs]
    for s in states:
        for m in masks:
            assert s & m != m
    # and not vacuous: non-mutex pairs of plane/passenger positions co-occur
    assert any(s & ct.mask([in_("P1", "A1"), at("A1", "city2")]) == ct.mask([in_("P1", "A1"), at("A1", "city2")]) for s in states)


def test_mutex_examples(zeno3):
    assert mutex(zeno3, at("P1", "city0"), at("P1", "city4"))
    assert mutex(zeno3, at("P1", "city0"), in_("P1", "A1"))
    assert mutex(zeno3, in_("P1", "A1"), in_("P2", "A1"))
    assert mutex(zeno3, empty("A1"), in_("P3", "A1"))
    assert not mutex(zeno3, at("P1", "city4"), at("P2", "city4"))
    assert not mutex(zeno3, at("A1", "city1"), at("A2", "city1"))
    assert mutex_free(zeno3, zeno3.goal)


def test_earliest_times_examples(zeno3):
    t = earliest_times(zeno3)
    assert t[at("A1", "city1")] == 2
    assert t[at("A1", "city3")] == 6
    assert t[at("P1", "city4")] == 4
    assert t[at("P1", "city0")] == 0
    c = earliest_times(zeno3, metric="cost")
    assert c[at("P1", "city4")] == 1


def test_earliest_times_lower_bound_real_plans(zeno3):
    """No executed plan makes an atom true before its earliest time."""
    t = earliest_times(zeno3)
    rng = random.Random(11)
    for _ in range(100):
        plan = compress(zeno3, [Plan.sequential(random_walk(zeno3, rng, 25))])
        for s in plan.steps:
            for q in s.action.add:
                assert s.end >= t[q]


def test_unreachable_atoms_are_infinite(zeno3):
    t = earliest_times(zeno3, state={at("A1", "city0")})
    assert t[at("P1", "city4")] == INF


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 30))
def test_compressed_walk_is_valid(seed, n):
    from aggplan.multizeno import ZenoSpec, build_task

    task = _TASK.setdefault("t", build_task(ZenoSpec(3))) if "t" not in _TASK else _TASK["t"]
    acts = random_walk(task, random.Random(seed), n)
    plan = compress(task, [Plan.sequential(acts)])
    v = validate_plan(task, plan, goal=())
    assert v.valid
    assert v.final_state == progress(task, None, acts)
    assert plan.cost == sum(a.cost for a in acts)


_TASK = {}
