import pytest

from aggplan.planning import Plan, at, compress, empty, in_, validate_plan
from aggplan.yahsp import Strategy, SubPlanner, SubplannerBudget, Unreachable, Unsolved, relaxed_plan, solve


def test_direct_solve_makespan_and_cost(zeno3):
    p = solve(zeno3, strategy="makespan")
    c = compress(zeno3, [p])
    assert validate_plan(zeno3, c).valid
    q = compress(zeno3, [solve(zeno3, strategy=Strategy.COST)])
    assert validate_plan(zeno3, q).valid
    # greedy search: no ordering guarantee, but the strategies do differ
    assert (q.makespan, q.cost) != (c.makespan, c.cost)


def test_solve_reaches_partial_goal(zeno3):
    goal = {at("P1", "city2"), at("A2", "city3")}
    plan = solve(zeno3, goal=goal)
    v = validate_plan(zeno3, compress(zeno3, [plan]), goal=goal)
    assert v.valid


def test_empty_plan_when_goal_holds(zeno3):
    assert solve(zeno3, goal={at("P1", "city0")}).steps == ()


def test_unreachable_goal(zeno3):
    with pytest.raises(Unreachable) as e:
        solve(zeno3, start={at("A1", "city0"), empty("A1")}, goal={at("P1", "city4")})
    assert e.value.reason == Unsolved.UNREACHABLE


def test_mutex_goal_exhausts_or_proves(zeno3):
    # relaxed-reachable but contradictory: the search ends unsolved
    with pytest.raises(Unsolved):
        solve(zeno3, goal={in_("P1", "A1"), in_("P2", "A1")}, budget=50)


def test_budget_exhaustion_reason(zeno6):
    with pytest.raises(Unsolved) as e:
        solve(zeno6, budget=1)
    assert e.value.reason == Unsolved.BUDGET and e.value.expanded == 1


def test_budget_validation():
    with pytest.raises(ValueError):
        SubplannerBudget(0)


def test_relaxed_plan_is_delete_free_cover(zeno3):
    acts = relaxed_plan(zeno3)
    reached = set(zeno3.initial)
    for a in acts:
        assert a.pre <= reached
        reached |= a.add
    assert zeno3.goal <= reached


def test_counters_and_cache(zeno3):
    sp = SubPlanner(zeno3, seed=3)
    ct = sp.ct
    s, g = ct.mask(zeno3.initial), ct.mask(zeno3.goal)
    a = sp.solve_masks(s, g, Strategy.MAKESPAN)
    b = sp.solve_masks(s, g, Strategy.MAKESPAN)
    assert a == b and sp.cache_hits == 1 and sp.calls == 2
    sp.solve_masks(s, g, Strategy.COST)
    assert sp.strategy_counts == {"makespan": 2, "cost": 1}


def test_deterministic_across_instances(zeno6):
    a = SubPlanner(zeno6, seed=5).solve(zeno6.initial, zeno6.goal)
    b = SubPlanner(zeno6, seed=5).solve(zeno6.initial, zeno6.goal)
    assert [x.name for x in a.actions] == [x.name for x in b.actions]
