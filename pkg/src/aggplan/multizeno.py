"""MultiZeno instances: task builder, reference Pareto fronts and PDDL export.

The domain is a star: ``city0`` is linked to every central city, every central
city to the goal city ``city4``. A plane carries one passenger at a time and
pays the central city's landing tax each time it lands there.

Leg durations (2, 4, 6) and taxes (3, 2, 1) for ``city1..city3`` are the only
symmetric assignment that reproduces the published anchor solutions (8, 12),
(16, 8) and (24, 4) for three passengers; the exact figure values are not
recoverable from the source.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from . import oracle
from .objectives import ObjectivePoint, ParetoFront, read_front_csv
from .planning import Action, Atom, Plan, PlanningTask, Step, at, empty, in_

CANONICAL_LEGS = (2, 4, 6)
CANONICAL_TAXES = (3, 2, 1)
STORED_TAX2 = {"2": Fraction(2), "1.1": Fraction(11, 10), "2.9": Fraction(29, 10)}


class FrontUnavailable(RuntimeError):
    """No stored front and the exhaustive oracle did not finish in time."""


def _rational(x) -> Fraction:
    return Fraction(repr(x)) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class ZenoSpec:
    passengers: int = 3
    planes: int = 2
    legs: tuple = CANONICAL_LEGS
    taxes: tuple = CANONICAL_TAXES
    tax2: object = None

    def __post_init__(self):
        legs = tuple(_rational(d) for d in self.legs)
        taxes = list(_rational(t) for t in self.taxes)
        if self.tax2 is not None:
            if len(taxes) < 2:
                raise ValueError("tax2 override needs at least two central cities")
            taxes[1] = _rational(self.tax2)
        object.__setattr__(self, "legs", legs)
        object.__setattr__(self, "taxes", tuple(taxes))
        object.__setattr__(self, "tax2", None)
        if self.passengers < 3 or self.passengers % 3:
            raise ValueError(f"unsupported passenger count {self.passengers}: need a multiple of 3")
        if self.planes < 1:
            raise ValueError("need at least one plane")
        if len(legs) != len(taxes) or not legs:
            raise ValueError("one leg duration and one tax per central city")
        if any(b <= a for a, b in zip(legs, legs[1:])) or legs[0] <= 0:
            raise ValueError("leg durations must be positive and strictly increasing")
        if any(t <= 0 for t in taxes):
            raise ValueError("landing taxes must be strictly positive")

    @classmethod
    def named(cls, instance: str, tax2=None) -> "ZenoSpec":
        m = re.fullmatch(r"(?:multi)?zeno(\d+)", instance.strip().lower())
        if not m:
            raise ValueError(f"unknown instance {instance!r} (expected zeno3, zeno6, zeno9, ...)")
        return cls(passengers=int(m.group(1)), tax2=tax2)

    @property
    def n_central(self) -> int:
        return len(self.legs)

    @property
    def goal_city(self) -> str:
        return f"city{self.n_central + 1}"

    @property
    def name(self) -> str:
        tag = f"zeno{self.passengers}"
        if self.is_canonical_except_tax2 and self.taxes[1] != 2:
            tag += f"-tax2-{float(self.taxes[1]):g}"
        elif not self.is_canonical_except_tax2:
            tag += "-custom"
        return tag

    @property
    def is_canonical_except_tax2(self) -> bool:
        return (
            self.planes == 2
            and self.legs == tuple(map(Fraction, CANONICAL_LEGS))
            and self.taxes[0] == CANONICAL_TAXES[0]
            and self.taxes[2:] == tuple(map(Fraction, CANONICAL_TAXES[2:]))
        )


def build_task(spec: ZenoSpec) -> PlanningTask:
    planes = tuple(f"A{i + 1}" for i in range(spec.planes))
    passengers = tuple(f"P{i + 1}" for i in range(spec.passengers))
    k = spec.n_central
    cities = tuple(f"city{i}" for i in range(k + 2))
    start, goal_city = cities[0], cities[-1]
    edges = []
    for i in range(1, k + 1):
        d, tax = spec.legs[i - 1], spec.taxes[i - 1]
        c = cities[i]
        edges += [(start, c, d, tax), (c, start, d, 0), (goal_city, c, d, tax), (c, goal_city, d, 0)]
    actions = []
    for a in planes:
        for src, dst, d, tax in edges:
            actions.append(
                Action(f"fly({a},{src},{dst})", {at(a, src)}, {at(a, dst)}, {at(a, src)}, d, tax, (a,))
            )
    for p in passengers:
        for a in planes:
            for c in cities:
                actions.append(
                    Action(
                        f"board({p},{a},{c})",
                        {at(p, c), at(a, c), empty(a)},
                        {in_(p, a)},
                        {at(p, c), empty(a)},
                        0, 0, (p, a),
                    )
                )
                actions.append(
                    Action(
                        f"debark({p},{a},{c})",
                        {in_(p, a), at(a, c)},
                        {at(p, c), empty(a)},
                        {in_(p, a)},
                        0, 0, (p, a),
                    )
                )
    initial = {at(x, start) for x in planes + passengers} | {empty(a) for a in planes}
    goal = {at(p, goal_city) for p in passengers}
    return PlanningTask(
        {"planes": planes, "passengers": passengers, "cities": cities},
        tuple(actions),
        frozenset(initial),
        frozenset(goal),
        name=spec.name,
    )


def shuttle_plan(task: PlanningTask, via: int = 1) -> Plan:
    """The no-idle-plane plan for three passengers through central city ``via``.

    Plane A1 carries P1 straight through, returns to pick up P2 that A2 dropped
    at the central city; A2 goes back for P3. Four landings, makespan four legs.
    """
    if len(task.passengers) != 3 or len(task.planes) != 2:
        raise ValueError("the shuttle plan is defined for 3 passengers and 2 planes")
    c0, g = task.cities[0], task.cities[-1]
    cv = task.cities[via]
    d = task.action(f"fly(A1,{c0},{cv})").duration
    T = lambda n: n * d  # noqa: E731
    seq = [
        (f"board(P1,A1,{c0})", 0), (f"fly(A1,{c0},{cv})", 0), (f"fly(A1,{cv},{g})", T(1)),
        (f"debark(P1,A1,{g})", T(2)), (f"fly(A1,{g},{cv})", T(2)), (f"board(P2,A1,{cv})", T(3)),
        (f"fly(A1,{cv},{g})", T(3)), (f"debark(P2,A1,{g})", T(4)),
        (f"board(P2,A2,{c0})", 0), (f"fly(A2,{c0},{cv})", 0), (f"debark(P2,A2,{cv})", T(1)),
        (f"fly(A2,{cv},{c0})", T(1)), (f"board(P3,A2,{c0})", T(2)), (f"fly(A2,{c0},{cv})", T(2)),
        (f"fly(A2,{cv},{g})", T(3)), (f"debark(P3,A2,{g})", T(4)),
    ]
    return Plan(tuple(Step(task.action(n), Fraction(t)) for n, t in seq))


# ---------------------------------------------------------------------------
# reference fronts


def _stored_front(spec: ZenoSpec):
    if not spec.is_canonical_except_tax2:
        return None
    for tag, value in STORED_TAX2.items():
        if spec.taxes[1] == value:
            name = f"zeno{spec.passengers}_tax2-{tag}.csv"
            ref = resources.files("aggplan.data").joinpath(name)
            if ref.is_file():
                with resources.as_file(ref) as path:
                    return read_front_csv(path)
    return None


def front_search(spec: ZenoSpec, time_limit: float | None = None) -> ParetoFront:
    """Exact front by exhaustive search, ignoring any stored data."""
    pts = oracle.pareto_search(
        spec.passengers,
        [(d, d) for d in spec.legs],
        spec.taxes,
        planes=spec.planes,
        time_limit=time_limit,
    )
    return ParetoFront(tuple(ObjectivePoint(m, c) for m, c in pts))


def exact_front(spec: ZenoSpec, time_limit: float | None = 30.0) -> ParetoFront:
    """Reference front: stored data when available, otherwise the exhaustive oracle."""
    stored = _stored_front(spec)
    if stored is not None:
        return ParetoFront(tuple(stored))
    try:
        return front_search(spec, time_limit=time_limit)
    except oracle.OracleTimeout as exc:
        raise FrontUnavailable(f"no stored front for {spec.name} and {exc}") from None


def front_provenance(spec: ZenoSpec) -> str:
    if _stored_front(spec) is not None:
        return f"{spec.name}: stored reference front, revalidated by exhaustive search"
    return f"{spec.name}: computed by exhaustive search"


# ---------------------------------------------------------------------------
# PDDL


DOMAIN_PDDL = """\
(define (domain multizeno-cost)
  (:requirements :typing :durative-actions :fluents)
  (:types plane passenger - locatable city)
  (:predicates (at ?x - locatable ?c - city)
               (in ?p - passenger ?a - plane)
               (empty ?a - plane)
               (connected ?c1 ?c2 - city))
  (:functions (flight-time ?c1 ?c2 - city)
              (landing-tax ?c - city)
              (total-cost))
  (:durative-action fly
    :parameters (?a - plane ?from ?to - city)
    :duration (= ?duration (flight-time ?from ?to))
    :condition (and (at start (at ?a ?from)) (at start (connected ?from ?to)))
    :effect (and (at start (not (at ?a ?from)))
                 (at end (at ?a ?to))
                 (at end (increase (total-cost) (landing-tax ?to)))))
  (:durative-action board
    :parameters (?p - passenger ?a - plane ?c - city)
    :duration (= ?duration 0)
    :condition (and (at start (at ?p ?c)) (at start (at ?a ?c)) (at start (empty ?a)))
    :effect (and (at start (not (at ?p ?c))) (at start (not (empty ?a)))
                 (at end (in ?p ?a))))
  (:durative-action debark
    :parameters (?p - passenger ?a - plane ?c - city)
    :duration (= ?duration 0)
    :condition (and (at start (in ?p ?a)) (at start (at ?a ?c)))
    :effect (and (at start (not (in ?p ?a)))
                 (at end (at ?p ?c)) (at end (empty ?a)))))
"""


def _num(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else repr(float(x))


def export_pddl(spec: ZenoSpec, alpha=None) -> tuple[str, str]:
    """Domain and problem text. ``alpha`` switches the metric to the weighted sum."""
    task = build_task(spec)
    cities = task.cities
    k = spec.n_central
    init = [f"(at {x} {cities[0]})" for x in task.planes + task.passengers]
    init += [f"(empty {a})" for a in task.planes]
    for i in range(1, k + 1):
        d = _num(spec.legs[i - 1])
        for u, v in ((cities[0], cities[i]), (cities[i], cities[-1])):
            init += [f"(connected {u} {v})", f"(connected {v} {u})"]
            init += [f"(= (flight-time {u} {v}) {d})", f"(= (flight-time {v} {u}) {d})"]
    for i, c in enumerate(cities):
        tax = spec.taxes[i - 1] if 1 <= i <= k else Fraction(0)
        init.append(f"(= (landing-tax {c}) {_num(tax)})")
    init.append("(= (total-cost) 0)")
    goal = " ".join(f"(at {p} {cities[-1]})" for p in task.passengers)
    if alpha is None:
        metric = "(:metric minimize (total-time))"
    else:
        a = _rational(alpha)
        metric = f"(:metric minimize (+ (* {_num(a)} (total-time)) (* {_num(1 - a)} (total-cost))))"
    problem = (
        f"(define (problem {spec.name})\n"
        "  (:domain multizeno-cost)\n"
        f"  (:objects {' '.join(task.planes)} - plane\n"
        f"            {' '.join(task.passengers)} - passenger\n"
        f"            {' '.join(cities)} - city)\n"
        "  (:init\n    " + "\n    ".join(init) + ")\n"
        f"  (:goal (and {goal}))\n"
        f"  {metric})\n"
    )
    return DOMAIN_PDDL, problem


def _sexp(text: str):
    tokens = re.findall(r"\(|\)|[^\s()]+", re.sub(r";[^\n]*", "", text).lower())
    stack = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    return stack[0][0]


def _section(tree, key):
    for item in tree:
        if isinstance(item, list) and item and item[0] == key:
            return item
    raise ValueError(f"missing {key} section")


def read_pddl_problem(problem: str) -> PlanningTask:
    """Rebuild a task from an exported MultiZeno problem (not a general PDDL parser)."""
    tree = _sexp(problem)
    objs = _section(tree, ":objects")[1:]
    kinds: dict[str, list[str]] = {}
    pending: list[str] = []
    it = iter(objs)
    for tok in it:
        if tok == "-":
            kinds.setdefault(next(it), []).extend(pending)
            pending = []
        else:
            pending.append(tok)
    cap = lambda names: tuple(n.upper() if not n.startswith("city") else n for n in names)  # noqa: E731
    planes, passengers = cap(kinds["plane"]), cap(kinds["passenger"])
    cities = tuple(sorted(kinds["city"], key=lambda c: int(c[4:])))
    durations, taxes = {}, {}
    for fact in _section(tree, ":init")[1:]:
        if fact[0] == "=" and fact[1][0] == "flight-time":
            durations[(fact[1][1], fact[1][2])] = Fraction(fact[2])
        elif fact[0] == "=" and fact[1][0] == "landing-tax":
            taxes[fact[1][1]] = Fraction(fact[2])
    centrals = cities[1:-1]
    spec = ZenoSpec(
        passengers=len(passengers),
        planes=len(planes),
        legs=tuple(durations[(cities[0], c)] for c in centrals),
        taxes=tuple(taxes[c] for c in centrals),
    )
    goal_atoms = _section(tree, ":goal")[1]
    goal = frozenset(Atom("at", (g[1].upper(), g[2])) for g in goal_atoms[1:])
    task = build_task(spec)
    if goal != task.goal:
        raise ValueError("goal does not match the MultiZeno family")
    return task
