"""Ground temporal planning model.

States are sets of boolean atoms, actions are grounded durative actions with an
additional landing cost. Durative semantics follow the usual PDDL 2.1 reading
restricted to what the transport domains need: preconditions are checked at
start, delete effects apply at start and add effects at end.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

INF = math.inf

#: mobile objects per predicate position, used by the structural mutex relation
PREDICATES = {"at": 2, "in": 2, "empty": 1}


class PlanError(ValueError):
    """Raised for malformed plans (unknown actions, negative start times, ...)."""


class Atom(NamedTuple):
    predicate: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"

    @classmethod
    def parse(cls, text: str) -> "Atom":
        text = text.strip()
        head, _, rest = text.partition("(")
        if not rest.endswith(")"):
            raise ValueError(f"cannot parse atom {text!r}")
        args = tuple(a.strip() for a in rest[:-1].split(",") if a.strip())
        return cls(head.strip(), args)


def at(obj: str, place: str) -> Atom:
    return Atom("at", (obj, place))


def in_(passenger: str, plane: str) -> Atom:
    return Atom("in", (passenger, plane))


def empty(plane: str) -> Atom:
    return Atom("empty", (plane,))


def _rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class Action:
    name: str
    pre: frozenset[Atom]
    add: frozenset[Atom]
    delete: frozenset[Atom]
    duration: Fraction = Fraction(0)
    cost: Fraction = Fraction(0)
    objects: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pre", frozenset(self.pre))
        object.__setattr__(self, "add", frozenset(self.add))
        object.__setattr__(self, "delete", frozenset(self.delete))
        object.__setattr__(self, "duration", _rational(self.duration))
        object.__setattr__(self, "cost", _rational(self.cost))
        if self.add & self.delete:
            raise ValueError(f"{self.name}: add and delete effects overlap")
        if self.duration < 0 or self.cost < 0:
            raise ValueError(f"{self.name}: negative duration or cost")

    def __str__(self) -> str:
        return self.name


State = frozenset  # frozenset[Atom]


@dataclass(frozen=True)
class Step:
    action: Action
    start: Fraction

    @property
    def end(self) -> Fraction:
        return self.start + self.action.duration


@dataclass(frozen=True)
class Plan:
    """Timed plan. Steps are kept sorted by start time, ties in listed order."""

    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        steps = []
        for s in self.steps:
            if not isinstance(s, Step):
                action, start = s
                s = Step(action, _rational(start))
            elif not isinstance(s.start, Fraction):
                s = Step(s.action, _rational(s.start))
            if s.start < 0:
                raise PlanError(f"negative start time for {s.action.name}")
            steps.append(s)
        steps.sort(key=lambda s: s.start)
        object.__setattr__(self, "steps", tuple(steps))

    @classmethod
    def sequential(cls, actions: Iterable[Action], start=0) -> "Plan":
        t = _rational(start)
        steps = []
        for a in actions:
            steps.append(Step(a, t))
            t += a.duration
        return cls(tuple(steps))

    @property
    def actions(self) -> tuple[Action, ...]:
        return tuple(s.action for s in self.steps)

    @property
    def makespan(self) -> Fraction:
        return max((s.end for s in self.steps), default=Fraction(0))

    @property
    def cost(self) -> Fraction:
        return sum((s.action.cost for s in self.steps), Fraction(0))

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return "\n".join(
            f"[{_fmt(s.start)}] {s.action.name} ({_fmt(s.action.duration)})" for s in self.steps
        )


def _fmt(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{float(x):g}"


@dataclass(frozen=True)
class PlanningTask:
    """A grounded task. ``objects`` maps kinds (planes, passengers, cities) to names."""

    objects: Mapping[str, tuple[str, ...]]
    actions: tuple[Action, ...]
    initial: frozenset[Atom]
    goal: frozenset[Atom]
    name: str = "task"
    capacity: int = 1
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "goal", frozenset(self.goal))
        object.__setattr__(self, "_index", {a.name: a for a in self.actions})
        if len(self._index) != len(self.actions):
            raise ValueError("duplicate action names")
        universe = self.atom_set
        for a in self.initial | self.goal:
            if a.predicate not in PREDICATES or len(a.args) != PREDICATES[a.predicate]:
                raise ValueError(f"bad atom {a}")
        if not self.goal <= universe:
            missing = sorted(map(str, self.goal - universe))
            raise ValueError(f"goal atoms not groundable: {missing}")

    def __hash__(self) -> int:
        return hash((self.name, self.initial, self.goal, self.actions))

    def action(self, name: str) -> Action:
        try:
            return self._index[name]
        except KeyError:
            raise PlanError(f"unknown action {name!r}") from None

    @cached_property
    def atoms(self) -> tuple[Atom, ...]:
        """The groundable atom universe in a fixed canonical order."""
        pool = set(self.initial) | set(self.goal)
        for a in self.actions:
            pool |= a.pre | a.add | a.delete
        return tuple(sorted(pool))

    @cached_property
    def atom_set(self) -> frozenset[Atom]:
        return frozenset(self.atoms)

    @cached_property
    def compiled(self) -> "CompiledTask":
        return CompiledTask(self)

    @property
    def planes(self) -> tuple[str, ...]:
        return tuple(self.objects.get("planes", ()))

    @property
    def passengers(self) -> tuple[str, ...]:
        return tuple(self.objects.get("passengers", ()))

    @property
    def cities(self) -> tuple[str, ...]:
        return tuple(self.objects.get("cities", ()))

    def without(self, names: Iterable[str]) -> "PlanningTask":
        """Copy of the task with some actions removed."""
        drop = set(names)
        return PlanningTask(
            self.objects,
            tuple(a for a in self.actions if a.name not in drop),
            self.initial,
            self.goal,
            name=self.name,
            capacity=self.capacity,
        )


class CompiledTask:
    """Bitmask view of a task for the search code. Atom i is bit ``1 << i``."""

    def __init__(self, task: PlanningTask):
        self.task = task
        self.atoms = task.atoms
        self.index = {a: i for i, a in enumerate(self.atoms)}
        self.n_atoms = len(self.atoms)
        self.actions = task.actions
        self.pre_mask = [self.mask(a.pre) for a in task.actions]
        self.add_mask = [self.mask(a.add) for a in task.actions]
        self.del_mask = [self.mask(a.delete) for a in task.actions]
        self.pre_idx = [tuple(sorted(self.index[p] for p in a.pre)) for a in task.actions]
        self.add_idx = [tuple(sorted(self.index[p] for p in a.add)) for a in task.actions]
        self.duration = [float(a.duration) for a in task.actions]
        self.cost = [float(a.cost) for a in task.actions]
        self.n_pre = [len(p) for p in self.pre_idx]
        consumers: list[list[int]] = [[] for _ in self.atoms]
        for k, pre in enumerate(self.pre_idx):
            for i in pre:
                consumers[i].append(k)
        self.consumers = [tuple(c) for c in consumers]
        self.free_actions = tuple(k for k, n in enumerate(self.n_pre) if n == 0)

    def mask(self, atoms: Iterable[Atom]) -> int:
        m = 0
        for a in atoms:
            m |= 1 << self.index[a]
        return m

    def unmask(self, m: int) -> frozenset[Atom]:
        out = []
        i = 0
        while m:
            if m & 1:
                out.append(self.atoms[i])
            m >>= 1
            i += 1
        return frozenset(out)

    def bits(self, m: int) -> list[int]:
        out = []
        i = 0
        while m:
            low = m & -m
            i = low.bit_length() - 1
            out.append(i)
            m ^= low
        return out

    def applicable(self, state: int) -> list[int]:
        pm = self.pre_mask
        return [k for k in range(len(pm)) if state & pm[k] == pm[k]]

    def apply(self, state: int, k: int) -> int:
        return (state & ~self.del_mask[k]) | self.add_mask[k]

    def fixpoint(self, state: int, weights: Sequence[float]) -> tuple[list[float], list[int]]:
        """Earliest-time fixed point from ``state`` under per-action ``weights``.

        Returns the value of every atom and, for each atom, the index of its best
        supporting action (-1 for atoms of the state or unreachable atoms).
        """
        n = self.n_atoms
        value = [INF] * n
        support = [-1] * n
        heap = []
        for i in self.bits(state):
            value[i] = 0.0
            heap.append((0.0, i))
        remaining = list(self.n_pre)
        for k in self.free_actions:
            w = weights[k]
            for q in self.add_idx[k]:
                if w < value[q]:
                    value[q] = w
                    support[q] = k
                    heap.append((w, q))
        heapq.heapify(heap)
        done = [False] * n
        consumers = self.consumers
        add_idx = self.add_idx
        while heap:
            v, i = heapq.heappop(heap)
            if done[i]:
                continue
            done[i] = True
            for k in consumers[i]:
                remaining[k] -= 1
                if remaining[k] == 0:
                    # atoms are finalised in nondecreasing order, so v is the max
                    nv = v + weights[k]
                    for q in add_idx[k]:
                        if nv < value[q]:
                            value[q] = nv
                            support[q] = k
                            heapq.heappush(heap, (nv, q))
        return value, support


def _as_state(task: PlanningTask, state) -> frozenset[Atom]:
    return task.initial if state is None else frozenset(state)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Validation:
    valid: bool
    makespan: Fraction
    cost: Fraction
    violations: tuple[str, ...] = ()
    final_state: frozenset = frozenset()

    def __bool__(self) -> bool:
        return self.valid


def _check_steps(task: PlanningTask, plan: Plan) -> None:
    for s in plan.steps:
        known = task._index.get(s.action.name)
        if known is None or known != s.action:
            raise PlanError(f"unknown action {s.action.name!r}")
        if s.start < 0:
            raise PlanError(f"negative start time for {s.action.name}")


def validate_plan(task: PlanningTask, plan: Plan, initial=None, goal=None) -> Validation:
    """Simulate ``plan`` from ``initial`` and check that ``goal`` holds at the end.

    Makespan and cost are recomputed from the steps. Semantic failures are
    reported in ``violations``; malformed input raises :class:`PlanError`.
    """
    _check_steps(task, plan)
    state = set(_as_state(task, initial))
    goal = task.goal if goal is None else frozenset(goal)
    violations = []
    pending: list[tuple[Fraction, int, Action]] = []  # (end, order, action)
    for order, step in enumerate(plan.steps):
        while pending and pending[0][0] <= step.start:
            _, _, done = heapq.heappop(pending)
            state |= done.add
        a = step.action
        missing = a.pre - state
        if missing:
            names = ", ".join(sorted(map(str, missing)))
            violations.append(f"[{_fmt(step.start)}] {a.name}: unsatisfied precondition {names}")
            continue
        state -= a.delete
        if a.duration == 0:
            state |= a.add
        else:
            heapq.heappush(pending, (step.end, order, a))
    while pending:
        _, _, done = heapq.heappop(pending)
        state |= done.add
    for g in sorted(goal - state):
        violations.append(f"goal {g} not satisfied")
    return Validation(not violations, plan.makespan, plan.cost, tuple(violations), frozenset(state))


def progress(task: PlanningTask, state, actions: Iterable[Action]) -> frozenset[Atom]:
    """Apply actions one after the other; raises PlanError on a failed precondition."""
    s = set(_as_state(task, state))
    for a in actions:
        if not a.pre <= s:
            missing = ", ".join(sorted(map(str, a.pre - s)))
            raise PlanError(f"{a.name}: unsatisfied precondition {missing}")
        s -= a.delete
        s |= a.add
    return frozenset(s)


# ---------------------------------------------------------------------------
# compression


def compress(task: PlanningTask, subplans: Sequence[Plan], initial=None) -> Plan:
    """Schedule the concatenation of ``subplans`` as early as possible.

    Each action starts once every earlier action it interferes with has
    finished: causal supports, actions whose effects touch its preconditions or
    effects, actions whose preconditions it would destroy, and actions sharing a
    plane or passenger. Deterministic; ties keep the input order.
    """
    actions = [a for p in subplans for a in p.actions]
    for a in actions:
        if task._index.get(a.name) != a:
            raise PlanError(f"unknown action {a.name!r}")
    progress(task, initial, actions)  # raises if not sequentially valid
    zero = Fraction(0)
    touched_end: dict = {}  # atom -> latest end of an earlier action adding/deleting it
    read_end: dict = {}  # atom -> latest end of an earlier action requiring it
    object_end: dict = {}
    steps = []
    for a in actions:
        touched = a.add | a.delete
        t = zero
        for q in a.pre:
            t = max(t, touched_end.get(q, zero))
        for q in touched:
            t = max(t, touched_end.get(q, zero), read_end.get(q, zero))
        for o in a.objects:
            t = max(t, object_end.get(o, zero))
        end = t + a.duration
        for q in touched:
            if touched_end.get(q, zero) < end:
                touched_end[q] = end
        for q in a.pre:
            if read_end.get(q, zero) < end:
                read_end[q] = end
        for o in a.objects:
            if object_end.get(o, zero) < end:
                object_end[o] = end
        steps.append(Step(a, t))
    return Plan(tuple(steps))


# ---------------------------------------------------------------------------
# mutex and earliest times


def mutex(task: PlanningTask, a: Atom, b: Atom) -> bool:
    """Structural exclusion between two atoms of a transport task."""
    if a == b:
        return False
    pa, pb = a.predicate, b.predicate
    if pa == "at" and pb == "at":
        return a.args[0] == b.args[0]
    if pa == "in" and pb == "in":
        if a.args[0] == b.args[0]:
            return True
        return a.args[1] == b.args[1] and task.capacity <= 1
    if {pa, pb} == {"at", "in"}:
        return a.args[0] == b.args[0]
    if {pa, pb} == {"empty", "in"}:
        e, i = (a, b) if pa == "empty" else (b, a)
        return e.args[0] == i.args[1]
    return False


def mutex_free(task: PlanningTask, atoms: Iterable[Atom]) -> bool:
    atoms = list(atoms)
    return not any(
        mutex(task, atoms[i], atoms[j]) for i in range(len(atoms)) for j in range(i + 1, len(atoms))
    )


def earliest_times(task: PlanningTask, state=None, metric: str = "duration") -> dict[Atom, Fraction | float]:
    """Lower bound on the time (or cost, with ``metric="cost"``) to make each atom true.

    Fixed point of ``t(a) = 0`` for atoms of the state and
    ``t(a) = min over achievers (weight + max over preconditions)``; unreachable
    atoms map to ``math.inf``.
    """
    if metric not in ("duration", "cost"):
        raise ValueError(f"unknown metric {metric!r}")
    state = _as_state(task, state)
    # exact variant of CompiledTask.fixpoint over Fractions
    value: dict[Atom, Fraction | float] = {a: INF for a in task.atoms}
    heap = []
    counter = 0
    for a in state:
        value[a] = Fraction(0)
        heap.append((Fraction(0), counter, a))
        counter += 1
    consumers: dict[Atom, list[Action]] = {a: [] for a in task.atoms}
    remaining = {}
    for act in task.actions:
        remaining[act.name] = len(act.pre)
        for p in act.pre:
            consumers[p].append(act)
        if not act.pre:
            w = getattr(act, metric)
            for q in act.add:
                if w < value[q]:
                    value[q] = w
                    heap.append((w, counter, q))
                    counter += 1
    heapq.heapify(heap)
    done = set()
    while heap:
        v, _, atom = heapq.heappop(heap)
        if atom in done:
            continue
        done.add(atom)
        for act in consumers[atom]:
            remaining[act.name] -= 1
            if remaining[act.name] == 0:
                nv = v + getattr(act, metric)
                for q in act.add:
                    if nv < value[q]:
                        value[q] = nv
                        heapq.heappush(heap, (nv, counter, q))
                        counter += 1
    return value
