"""Exhaustive bi-objective search for MultiZeno Pareto fronts.

Independent from the planner: it works on an abstract event model where
passengers are interchangeable (only counts per location are tracked), planes
are interchangeable (plane states are kept sorted) and decisions are taken only
when some plane becomes free. Labels ``(time, cost)`` are pruned by per-state
dominance and by admissible lower bounds against the goals found so far, so the
result is the exact set of nondominated ``(makespan, cost)`` pairs.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from fractions import Fraction


class OracleTimeout(RuntimeError):
    pass


def _scale(values):
    den = math.lcm(*(v.denominator for v in values)) if values else 1
    return den, [int(v * den) for v in values]


def pareto_search(passengers: int, legs, taxes, planes: int = 2, time_limit: float | None = None):
    """Return the exact Pareto front as a sorted list of ``(makespan, cost)`` Fractions.

    ``legs[i]`` is the pair of leg durations (city0 -> central i, central i ->
    goal city) and ``taxes[i]`` the landing tax of central city i.
    """
    k = len(legs)
    goal = k + 1
    legs_f = [(Fraction(a), Fraction(b)) for a, b in legs]
    taxes_f = [Fraction(t) for t in taxes]
    tden, flat = _scale([x for pair in legs_f for x in pair])
    L = [(flat[2 * i], flat[2 * i + 1]) for i in range(k)]
    cden, tx = _scale(taxes_f)
    tax = [0] + tx + [0]

    def dur(a, b):
        central = b if a in (0, goal) else a
        return L[central - 1][1] if goal in (a, b) else L[central - 1][0]

    nbrs = {0: list(range(1, k + 1)), goal: list(range(1, k + 1))}
    for i in range(1, k + 1):
        nbrs[i] = [0, goal]
    min_tax = min(tax[1:goal])
    dmin = min(min(a, b) for a, b in L)

    def level(loc):
        return 0 if loc == 0 else (2 if loc == goal else 1)

    def bounds(counts, pl):
        # forward legs still needed, returns forced by the level argument
        need = 2 * counts[0] + sum(counts[1:])
        at_start = counts[0]
        slack = 0
        rem = 0
        for loc, r, car in pl:
            lv = level(loc)
            if car:
                need += 2 - lv
                at_start += lv == 0
            slack += 2 - lv
            rem += r
        if need == 0:
            return 0, 0
        total_legs = need + max(0, need - slack)
        lt = -(-(rem + dmin * total_legs) // planes)
        landings = max(at_start, -(-(total_legs - planes) // 2))
        return lt, min_tax * landings

    def options(p):
        loc, _, car = p
        out = []
        if car and loc == goal:
            debarks = (True,)
        elif car and loc != 0:
            debarks = (False, True)
        else:
            debarks = (False,)
        for deb in debarks:
            can_board = loc != goal and not car and not deb
            for board in (False, True) if can_board else (False,):
                carrying = (car and not deb) or board
                for mv in nbrs[loc] + [None]:
                    # a loaded plane only moves towards the goal city
                    if mv is not None and carrying and not (loc == 0 or mv == goal):
                        continue
                    out.append((deb, board, mv))
        return out

    start = ((passengers,) + (0,) * k, tuple([(0, 0, False)] * planes))
    labels = {start: [(0, 0)]}
    heap = [(0, 0, start)]
    goals: list[tuple[int, int]] = []
    t0 = time.monotonic()
    pops = 0
    while heap:
        t, c, st = heapq.heappop(heap)
        pops += 1
        if time_limit is not None and pops % 2048 == 0 and time.monotonic() - t0 > time_limit:
            raise OracleTimeout(f"front search exceeded {time_limit} s")
        if (t, c) not in labels[st]:
            continue
        counts, pl = st
        lt, lc = bounds(counts, pl)
        if any(gt <= t + lt and gc <= c + lc for gt, gc in goals):
            continue
        if lt == 0 and lc == 0 and not any(counts) and not any(p[2] for p in pl):
            goals.append((t, c))
            continue
        free = [i for i, p in enumerate(pl) if p[1] == 0]
        for combo in itertools.product(*(options(pl[i]) for i in free)):
            cs = list(counts)
            new = list(pl)
            cost = c
            ok = True
            for i, (deb, _, _) in zip(free, combo):
                if deb and pl[i][0] != goal:
                    cs[pl[i][0]] += 1
            for i, (deb, board, mv) in zip(free, combo):
                loc, _, car = pl[i]
                carrying = car and not deb
                if board:
                    if cs[loc] <= 0:
                        ok = False
                        break
                    cs[loc] -= 1
                    carrying = True
                if mv is None:
                    new[i] = (loc, 0, carrying)
                else:
                    new[i] = (mv, dur(loc, mv), carrying)
                    cost += tax[mv]
            if not ok:
                continue
            if not any(cs) and not any(p[2] for p in new):
                nt = t
                ns = (tuple(cs), tuple(sorted((p[0], 0, False) for p in new)))
            else:
                moving = [p[1] for p in new if p[1]]
                if not moving:
                    continue
                d = min(moving)
                nt = t + d
                ns = (tuple(cs), tuple(sorted((l, r - d if r else 0, cr) for l, r, cr in new)))
            labs = labels.setdefault(ns, [])
            if any(a <= nt and b <= cost for a, b in labs):
                continue
            labs[:] = [(a, b) for a, b in labs if not (nt <= a and cost <= b)]
            labs.append((nt, cost))
            heapq.heappush(heap, (nt, cost, ns))
    found = set(goals)
    front = sorted(
        p for p in found if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in found)
    )
    return [(Fraction(m, tden), Fraction(cst, cden)) for m, cst in front]
