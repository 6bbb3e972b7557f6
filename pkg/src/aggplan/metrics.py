"""Performance assessment: dominance filter, 2-D hypervolume, unary
hypervolume against a reference front, hitting times and the Wilcoxon
signed-rank test.

All quantities are exact rationals; float inputs are read through their
shortest decimal repr so ``1.1`` means 11/10.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from statistics import NormalDist, median
from typing import Iterable, NamedTuple, Sequence

from .objectives import ObjectivePoint, ParetoFront

EXACT_MAX_N = 20


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite objective value {x}")
        return Fraction(repr(x))
    return Fraction(x)


def _point(p) -> ObjectivePoint:
    m, c = p
    return ObjectivePoint(_q(m), _q(c))


class ReferencePoint(NamedTuple):
    makespan: Fraction
    cost: Fraction


def nondominated(points: Iterable) -> ParetoFront:
    """Maximal nondominated subset under minimisation of both objectives."""
    pts = sorted({_point(p) for p in points})
    out = []
    best_cost = None
    for p in pts:
        # sorted by makespan then cost: p survives iff its cost beats every earlier one
        if best_cost is None or p.cost < best_cost:
            out.append(p)
            best_cost = p.cost
    return ParetoFront(tuple(out))


def default_reference_point(front: Iterable, margin=Fraction(105, 100)) -> ReferencePoint:
    pts = [_point(p) for p in front]
    if not pts:
        raise ValueError("reference point needs a nonempty front")
    margin = _q(margin)
    return ReferencePoint(
        margin * max(p.makespan for p in pts), margin * max(p.cost for p in pts)
    )


def _ref(ref) -> ReferencePoint:
    m, c = ref
    return ReferencePoint(_q(m), _q(c))


def hypervolume_2d(front: Iterable, ref) -> Fraction:
    """Area dominated by ``front`` and bounded by ``ref``."""
    ref = _ref(ref)
    pts = nondominated(front).points
    for p in pts:
        if p.makespan > ref.makespan or p.cost > ref.cost:
            raise ValueError(f"point {tuple(map(float, p))} outside the reference box {tuple(map(float, ref))}")
    area = Fraction(0)
    for i, p in enumerate(pts):
        right = pts[i + 1].makespan if i + 1 < len(pts) else ref.makespan
        area += (right - p.makespan) * (ref.cost - p.cost)
    return area


def clip(points: Iterable, ref) -> list[ObjectivePoint]:
    """Points inside the reference box; the rest contribute nothing."""
    ref = _ref(ref)
    return [p for p in map(_point, points) if p.makespan <= ref.makespan and p.cost <= ref.cost]


def unary_hypervolume(points: Iterable, reference: Iterable, ref=None) -> Fraction:
    """I_H^-: hypervolume of the reference front minus that of ``points``.

    Computed as HV(R + A) - HV(A) over ``points`` clipped to the box. This
    equals HV(R) - HV(A) whenever A is weakly dominated by R (always the case
    for true fronts) and stays nonnegative otherwise.
    """
    reference = list(reference)
    ref = default_reference_point(reference) if ref is None else _ref(ref)
    a = clip(points, ref)
    return hypervolume_2d(reference + a, ref) - hypervolume_2d(a, ref)


# ---------------------------------------------------------------------------
# traces


def _front_set(reference) -> list[ObjectivePoint]:
    return [_point(p) for p in reference]


def hitting_table(traces: Sequence, reference: Iterable) -> dict[ObjectivePoint, list[tuple]]:
    """For each reference point, ``(run_id, first hit time or None)`` per run.

    ``traces`` is a sequence of RunTrace objects (run ids are positions) or
    of ``(run_id, RunTrace)`` pairs. Matching is exact on coordinates.
    """
    ref_pts = _front_set(reference)
    table = {r: [] for r in ref_pts}
    for k, item in enumerate(traces):
        run_id, trace = item if isinstance(item, tuple) else (k, item)
        first = {}
        for snap in trace:
            seen = {_point(p) for p in snap.points}
            for r in ref_pts:
                if r not in first and r in seen:
                    first[r] = snap.t_seconds
        for r in ref_pts:
            table[r].append((run_id, first.get(r)))
    return table


def hitting_ratio(table: dict, t: float) -> dict[ObjectivePoint, float]:
    return {
        r: (sum(1 for _, h in hits if h is not None and h <= t) / len(hits) if hits else 0.0)
        for r, hits in table.items()
    }


def hypervolume_series(trace, reference, ref=None) -> list[dict]:
    """Per-snapshot I_H^- of the snapshot population and of the run archive
    (everything the run had shown up to that snapshot)."""
    reference = list(reference)
    ref = default_reference_point(reference) if ref is None else _ref(ref)
    archive: list[ObjectivePoint] = []
    rows = []
    for snap in trace:
        pop = [_point(p) for p in snap.points]
        archive = list(nondominated(archive + clip(pop, ref)))
        rows.append(
            {
                "t_seconds": snap.t_seconds,
                "evals": snap.evals,
                "ih_population": unary_hypervolume(pop, reference, ref),
                "ih_archive": unary_hypervolume(archive, reference, ref),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    reject: bool
    n: int
    method: str
    alternative: str = "two-sided"


def _average_ranks(values: Sequence) -> list[Fraction]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = Fraction(i + j + 2, 2)
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def _exact_distribution(ranks: Sequence[Fraction]) -> dict[int, int]:
    """Count of sign assignments per doubled W+ (ranks may be half-integers)."""
    dist = Counter({0: 1})
    for r in ranks:
        step = int(2 * r)
        nxt = Counter()
        for s, k in dist.items():
            nxt[s] += k
            nxt[s + step] += k
        dist = nxt
    return dist


def wilcoxon_signed_rank(
    x: Sequence, y: Sequence, confidence: float = 0.95, alternative: str = "two-sided", method: str = "auto"
) -> WilcoxonResult:
    """Paired signed-rank test on ``x - y``.

    ``alternative`` is ``"two-sided"``, ``"greater"`` (x tends to exceed y) or
    ``"less"``. ``method`` is ``"exact"``, ``"normal"`` or ``"auto"`` (exact
    for at most 20 nonzero differences).
    """
    if len(x) != len(y):
        raise ValueError("paired samples must have equal length")
    if len(x) < 5:
        raise ValueError("need at least 5 pairs")
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    d = [_q(a) - _q(b) for a, b in zip(x, y)]
    d = [v for v in d if v != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, False, 0, "exact", alternative)
    ranks = _average_ranks([abs(v) for v in d])
    w_plus = sum((r for r, v in zip(ranks, d) if v > 0), Fraction(0))
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"
    if method == "exact":
        dist = _exact_distribution(ranks)
        total = 2**n
        w2 = int(2 * w_plus)
        upper = Fraction(sum(k for s, k in dist.items() if s >= w2), total)
        lower = Fraction(sum(k for s, k in dist.items() if s <= w2), total)
    elif method == "normal":
        mean = sum(ranks) / 2
        sd = math.sqrt(float(sum(r * r for r in ranks)) / 4)
        z = float(w_plus - mean) / sd
        nd = NormalDist()
        upper, lower = 1 - nd.cdf(z), nd.cdf(z)
    else:
        raise ValueError(f"unknown method {method!r}")
    if alternative == "greater":
        p = upper
    elif alternative == "less":
        p = lower
    else:
        p = min(1, 2 * min(upper, lower))
    p = float(p)
    return WilcoxonResult(float(w_plus), p, p < 1 - confidence, n, method, alternative)


def exact_pvalue_bruteforce(diffs: Sequence, alternative: str = "greater") -> Fraction:
    """Reference p-value by enumerating all 2^n sign assignments (small n only)."""
    d = [_q(v) for v in diffs if _q(v) != 0]
    ranks = _average_ranks([abs(v) for v in d])
    w = sum((r for r, v in zip(ranks, d) if v > 0), Fraction(0))
    hits_up = hits_lo = 0
    for signs in product((0, 1), repeat=len(d)):
        s = sum((r for r, b in zip(ranks, signs) if b), Fraction(0))
        hits_up += s >= w
        hits_lo += s <= w
    total = 2 ** len(d)
    if alternative == "greater":
        return Fraction(hits_up, total)
    if alternative == "less":
        return Fraction(hits_lo, total)
    return min(Fraction(1), 2 * Fraction(min(hits_up, hits_lo), total))


def sample_median(values: Iterable) -> float:
    return float(median(_q(v) for v in values))
