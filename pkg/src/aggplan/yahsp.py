"""Sub-optimal forward planner used on each DaE sub-problem.

Greedy best-first search on ``h(s) = sum of earliest-time values of the
unsatisfied goal atoms``, with a relaxed-plan lookahead successor after every
expansion and a hard cap on expanded nodes. The ``cost`` strategy runs the same
search with landing taxes in place of durations; the other objective is only
used to break ties.
"""
from __future__ import annotations

import heapq
import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .planning import INF, Plan, PlanningTask

DEFAULT_MAX_NODES = 100
#: weight of the secondary objective and of plan length in the heuristic
_TIE_EPS = 1e-4
_LEN_EPS = 1e-6


class Strategy(str, Enum):
    MAKESPAN = "makespan"
    COST = "cost"


@dataclass(frozen=True)
class SubplannerBudget:
    max_nodes: int = DEFAULT_MAX_NODES

    def __post_init__(self):
        if int(self.max_nodes) < 1:
            raise ValueError("max_nodes must be >= 1")


class Unsolved(Exception):
    BUDGET = "budget-exhausted"
    UNREACHABLE = "proved-unreachable"

    def __init__(self, reason: str, expanded: int = 0):
        super().__init__(f"{reason} after {expanded} expansions")
        self.reason = reason
        self.expanded = expanded


class Unreachable(Unsolved):
    def __init__(self, atoms=()):
        super().__init__(Unsolved.UNREACHABLE, 0)
        self.atoms = tuple(atoms)


def _strategy(s) -> Strategy:
    return s if isinstance(s, Strategy) else Strategy(s)


class SubPlanner:
    """Solver bound to one task. Keeps per-instance caches and counters.

    One instance per worker; instances only share the immutable task.
    """

    def __init__(self, task: PlanningTask, seed: int = 0, cache_size: int = 200_000):
        self.task = task
        self.ct = task.compiled
        self.seed = seed
        self.cache_size = cache_size
        ct = self.ct
        self._weights = {
            Strategy.MAKESPAN: [
                d + _TIE_EPS * c + _LEN_EPS for d, c in zip(ct.duration, ct.cost)
            ],
            Strategy.COST: [c + _TIE_EPS * d + _LEN_EPS for d, c in zip(ct.duration, ct.cost)],
        }
        self._fix_cache: dict = {}
        self._solve_cache: dict = {}
        self.expanded = 0
        self.calls = 0
        self.cache_hits = 0
        self.strategy_counts: Counter = Counter()

    # -- heuristic ---------------------------------------------------------

    def _fixpoint(self, state: int, strategy: Strategy):
        key = (state, strategy)
        hit = self._fix_cache.get(key)
        if hit is None:
            if len(self._fix_cache) >= self.cache_size:
                self._fix_cache.clear()
            hit = self.ct.fixpoint(state, self._weights[strategy])
            self._fix_cache[key] = hit
        return hit

    def _h(self, state: int, goal_bits: list[int], strategy: Strategy) -> float:
        value, _ = self._fixpoint(state, strategy)
        h = 0.0
        for g in goal_bits:
            if not (state >> g) & 1:
                h += value[g]
        return h

    def relaxed_plan_indices(self, state: int, goal: int, strategy: Strategy) -> list[int]:
        value, support = self._fixpoint(state, strategy)
        ct = self.ct
        chosen: list[int] = []
        seen_actions = set()
        seen_atoms = set()
        stack = [g for g in ct.bits(goal & ~state)]
        missing = [ct.atoms[g] for g in stack if value[g] == INF]
        if missing:
            raise Unreachable(missing)
        while stack:
            g = stack.pop()
            if g in seen_atoms or (state >> g) & 1:
                continue
            seen_atoms.add(g)
            k = support[g]
            if k in seen_actions:
                continue
            seen_actions.add(k)
            chosen.append(k)
            stack.extend(ct.pre_idx[k])
        chosen.sort(key=lambda k: (max((value[p] for p in ct.pre_idx[k]), default=0.0), k))
        return chosen

    def _lookahead(self, state: int, plan: list[int]) -> tuple[int, list[int]]:
        ct = self.ct
        todo = list(plan)
        applied = []
        progress = True
        while todo and progress:
            progress = False
            rest = []
            for k in todo:
                pm = ct.pre_mask[k]
                if state & pm == pm:
                    nxt = ct.apply(state, k)
                    if nxt != state:
                        state = nxt
                        applied.append(k)
                        progress = True
                else:
                    rest.append(k)
            todo = rest
        return state, applied

    # -- search ------------------------------------------------------------

    def solve_masks(self, start: int, goal: int, strategy, max_nodes: int = DEFAULT_MAX_NODES) -> list[int]:
        """Action indices of a plan from ``start`` reaching every bit of ``goal``."""
        strategy = _strategy(strategy)
        self.calls += 1
        self.strategy_counts[strategy.value] += 1
        key = (start, goal, strategy, max_nodes)
        hit = self._solve_cache.get(key)
        if hit is not None:
            self.cache_hits += 1
            if isinstance(hit, Unsolved):
                raise hit
            return list(hit)
        try:
            result = self._search(start, goal, strategy, max_nodes)
        except Unsolved as exc:
            self._remember(key, exc)
            raise
        self._remember(key, tuple(result))
        return result

    def _remember(self, key, value) -> None:
        if len(self._solve_cache) >= self.cache_size:
            self._solve_cache.clear()
        self._solve_cache[key] = value

    def _search(self, start: int, goal: int, strategy: Strategy, max_nodes: int) -> list[int]:
        if start & goal == goal:
            return []
        ct = self.ct
        goal_bits = ct.bits(goal)
        rng = random.Random(f"{self.seed}:{start}:{goal}:{strategy.value}")
        value, _ = self._fixpoint(start, strategy)
        missing = [ct.atoms[g] for g in goal_bits if value[g] == INF]
        if missing:
            raise Unreachable(missing)
        parent: dict[int, tuple[int, tuple[int, ...]]] = {start: (-1, ())}
        counter = 0
        open_list = [(self._h(start, goal_bits, strategy), 0.0, counter, start)]
        expanded = 0

        def path_to(state: int) -> list[int]:
            out: list[tuple[int, ...]] = []
            while state != start:
                prev, acts = parent[state]
                out.append(acts)
                state = prev
            return [k for acts in reversed(out) for k in acts]

        n_actions = len(ct.actions)
        pre_mask = ct.pre_mask
        while open_list:
            if expanded >= max_nodes:
                self.expanded += expanded
                raise Unsolved(Unsolved.BUDGET, expanded)
            _, _, _, state = heapq.heappop(open_list)
            expanded += 1
            # lookahead successor from the relaxed plan
            try:
                rp = self.relaxed_plan_indices(state, goal, strategy)
            except Unreachable:
                continue
            la_state, la_actions = self._lookahead(state, rp)
            if la_actions and la_state not in parent:
                parent[la_state] = (state, tuple(la_actions))
                if la_state & goal == goal:
                    self.expanded += expanded
                    return path_to(la_state)
                counter += 1
                heapq.heappush(
                    open_list, (self._h(la_state, goal_bits, strategy), -1.0, counter, la_state)
                )
            successors = []
            for k in range(n_actions):
                pm = pre_mask[k]
                if state & pm != pm:
                    continue
                nxt = ct.apply(state, k)
                if nxt == state or nxt in parent:
                    continue
                parent[nxt] = (state, (k,))
                if nxt & goal == goal:
                    self.expanded += expanded
                    return path_to(nxt)
                successors.append(nxt)
            for nxt in successors:
                counter += 1
                heapq.heappush(
                    open_list, (self._h(nxt, goal_bits, strategy), rng.random(), counter, nxt)
                )
        self.expanded += expanded
        raise Unsolved(Unsolved.UNREACHABLE, expanded)

    # -- public API on atoms -------------------------------------------------

    def solve(self, start, goal, strategy=Strategy.MAKESPAN, budget: SubplannerBudget | int | None = None) -> Plan:
        max_nodes = _max_nodes(budget)
        ct = self.ct
        idx = self.solve_masks(ct.mask(start), ct.mask(goal), strategy, max_nodes)
        return Plan.sequential(ct.actions[k] for k in idx)

    def relaxed_plan(self, start, goal, strategy=Strategy.MAKESPAN):
        ct = self.ct
        idx = self.relaxed_plan_indices(ct.mask(start), ct.mask(goal), _strategy(strategy))
        return [ct.actions[k] for k in idx]


def _max_nodes(budget) -> int:
    if budget is None:
        return DEFAULT_MAX_NODES
    if isinstance(budget, SubplannerBudget):
        return budget.max_nodes
    return SubplannerBudget(int(budget)).max_nodes


def solve(
    task: PlanningTask,
    start: Iterable | None = None,
    goal: Iterable | None = None,
    strategy=Strategy.MAKESPAN,
    budget: SubplannerBudget | int | None = None,
    seed: int = 0,
) -> Plan:
    """One-shot solve; raises :class:`Unsolved` on failure."""
    planner = SubPlanner(task, seed=seed)
    return planner.solve(
        task.initial if start is None else start,
        task.goal if goal is None else goal,
        strategy,
        budget,
    )


def relaxed_plan(task: PlanningTask, start=None, goal=None, strategy=Strategy.MAKESPAN):
    """Delete-relaxed plan (unique actions) backchained from the earliest-time fixed point."""
    planner = SubPlanner(task)
    return planner.relaxed_plan(
        task.initial if start is None else start, task.goal if goal is None else goal, strategy
    )
