"""Divide-and-Evolve: evolve sequences of partial states, solve the chain with
the sub-planner and score the compressed concatenated plan.
"""
from __future__ import annotations

import hashlib
import json
import random
import time
from bisect import bisect_left, bisect_right
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .objectives import ObjectivePoint
from .planning import INF, Atom, Plan, PlanningTask, compress, earliest_times, mutex, validate_plan
from .yahsp import DEFAULT_MAX_NODES, Strategy, SubPlanner, Unsolved

PENALTY_BASE = 10**6
CROSSOVER_RETRIES = 10
MUTATION_RETRIES = 10

PROBAS = (0.0, 0.1, 0.2, 0.5, 0.8, 1.0)
WEIGHTS = (0, 1, 3, 5, 7, 10)
TABLE1 = {
    "w_makespan": (0, 1, 2, 3, 4, 5),
    "w_cost": (0, 1, 2, 3, 4, 5),
    "pop_size": (30, 50, 100, 200, 300),
    "proba_cross": PROBAS,
    "proba_mut": PROBAS,
    "w_add_atom": WEIGHTS,
    "w_add_goal": WEIGHTS,
    "w_del_atom": WEIGHTS,
    "w_del_goal": WEIGHTS,
    "proba_change": PROBAS,
    "proba_delatom": PROBAS,
    "radius": (1, 3, 5, 7, 10),
}
#: names used in configuration files and reports
TABLE1_LABELS = {
    "w_makespan": "W-makespan",
    "w_cost": "W-cost",
    "pop_size": "Pop-size",
    "proba_cross": "Proba-cross",
    "proba_mut": "Proba-mut",
    "w_add_atom": "w-addAtom",
    "w_add_goal": "w-addGoal",
    "w_del_atom": "w-delAtom",
    "w_del_goal": "w-delGoal",
    "proba_change": "Proba-change",
    "proba_delatom": "Proba-delatom",
    "radius": "Radius",
}
_LABEL_TO_FIELD = {v.lower(): k for k, v in TABLE1_LABELS.items()}

#: effort seconds per node expansion and per (action x atom) of the task, and
#: per sub-planner call; least-squares fit of CPU time on the reference
#: machine over Zeno3/6/9 runs, so effort seconds track CPU seconds (+-30%)
EXPANSION_SECONDS = 6.8e-8
SUBSOLVE_SECONDS = 3.2e-4


@dataclass(frozen=True)
class DaEConfig:
    w_makespan: int = 1
    w_cost: int = 1
    pop_size: int = 30
    proba_cross: float = 0.2
    proba_mut: float = 0.8
    w_add_atom: int = 1
    w_add_goal: int = 1
    w_del_atom: int = 1
    w_del_goal: int = 1
    proba_change: float = 0.5
    proba_delatom: float = 0.5
    radius: int = 3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v not in TABLE1[f.name]:
                raise ValueError(f"{TABLE1_LABELS[f.name]}={v!r} not in {TABLE1[f.name]}")
        if self.w_makespan + self.w_cost == 0:
            raise ValueError("W-makespan + W-cost must be positive")

    def to_dict(self, labels: bool = False) -> dict:
        d = asdict(self)
        return {TABLE1_LABELS[k]: v for k, v in d.items()} if labels else d

    @classmethod
    def from_dict(cls, d: dict) -> "DaEConfig":
        kw = {}
        for k, v in d.items():
            name = k if k in TABLE1 else _LABEL_TO_FIELD.get(str(k).lower())
            if name is None:
                raise ValueError(f"unknown DaE parameter {k!r}")
            kw[name] = float(v) if isinstance(TABLE1[name][0], float) else int(v)
        return cls(**kw)

    @property
    def p_makespan(self) -> Fraction:
        return Fraction(self.w_makespan, self.w_makespan + self.w_cost)


def scalar_fitness(alpha, makespan, cost):
    """``alpha * makespan + (1 - alpha) * cost``, exact for rational inputs."""
    return alpha * makespan + (1 - alpha) * cost


# ---------------------------------------------------------------------------
# genome


@dataclass(frozen=True, order=True)
class Station:
    key: Fraction
    atoms: tuple[Atom, ...]

    def __len__(self) -> int:
        return len(self.atoms)

    def __str__(self) -> str:
        return f"{{{', '.join(map(str, self.atoms))}}}@{float(self.key):g}"


@dataclass(frozen=True)
class Genome:
    stations: tuple[Station, ...] = ()

    def __len__(self) -> int:
        return len(self.stations)

    def __iter__(self):
        return iter(self.stations)

    @property
    def keys(self) -> list[Fraction]:
        return [s.key for s in self.stations]

    def is_time_consistent(self) -> bool:
        k = self.keys
        return all(a <= b for a, b in zip(k, k[1:]))

    def __str__(self) -> str:
        return " -> ".join(map(str, self.stations)) or "<direct>"


class GenomeSpace:
    """Atom pool, earliest-time dates and mutex relation of one task."""

    def __init__(self, task: PlanningTask, max_stations: int | None = None, max_atoms: int | None = None):
        self.task = task
        times = earliest_times(task)
        self.date = {a: t for a, t in times.items() if t != INF}
        self.dates = sorted(set(self.date.values()))
        self.by_date = {d: sorted(a for a, t in self.date.items() if t == d) for d in self.dates}
        self.pool = sorted(self.date)
        self.max_stations = len(task.goal) + 2 if max_stations is None else max_stations
        self.max_atoms = max(1, len(task.goal)) if max_atoms is None else max_atoms
        self._mutex = {
            a: frozenset(b for b in self.pool if mutex(task, a, b)) for a in self.pool
        }

    def compatible(self, atom: Atom, others: Iterable[Atom]) -> bool:
        bad = self._mutex.get(atom, frozenset())
        return all(o != atom and o not in bad for o in others)

    def station(self, atoms: Iterable[Atom]) -> Station:
        atoms = tuple(sorted(set(atoms)))
        return Station(min(self.date[a] for a in atoms), atoms)

    def is_valid(self, genome: Genome) -> bool:
        for s in genome.stations:
            if not s.atoms or s.key != min(self.date[a] for a in s.atoms):
                return False
            if any(not self.compatible(a, [b for b in s.atoms if b != a]) for a in s.atoms):
                return False
        return genome.is_time_consistent()

    def dates_between(self, lo, hi) -> list[Fraction]:
        return self.dates[bisect_left(self.dates, lo): bisect_right(self.dates, hi)]

    def atoms_from(self, lo) -> list[Atom]:
        return [a for d in self.dates[bisect_left(self.dates, lo):] for a in self.by_date[d]]

    def random_station(self, rng: random.Random, date, radius: int = 1) -> Station:
        i = self.dates.index(date)
        window = [a for d in self.dates[i: i + max(1, radius)] for a in self.by_date[d]]
        chosen = [rng.choice(self.by_date[date])]
        size = rng.randint(1, self.max_atoms)
        rng.shuffle(window)
        for a in window:
            if len(chosen) >= size:
                break
            if self.compatible(a, chosen):
                chosen.append(a)
        return self.station(chosen)


def init_genome(space: GenomeSpace, rng: random.Random, max_stations: int | None = None) -> Genome:
    cap = space.max_stations if max_stations is None else max_stations
    if cap <= 0 or not space.dates:
        return Genome()
    n = rng.randint(1, cap)
    dates = sorted(rng.choice(space.dates) for _ in range(n))
    return Genome(tuple(space.random_station(rng, d) for d in dates))


def crossover(a: Genome, b: Genome, rng: random.Random, retries: int = CROSSOVER_RETRIES) -> Genome:
    """One-point crossover with independent cut points; falls back to a copy of ``a``."""
    for _ in range(retries):
        i = rng.randint(0, len(a))
        j = rng.randint(0, len(b))
        child = Genome(a.stations[:i] + b.stations[j:])
        if child.is_time_consistent():
            return child
    return a


MUTATIONS = ("add_atom", "add_goal", "del_atom", "del_goal")


def choose_mutation(cfg: DaEConfig, rng: random.Random, genome: Genome | None = None) -> str | None:
    weights = {
        "add_atom": cfg.w_add_atom,
        "add_goal": cfg.w_add_goal,
        "del_atom": cfg.w_del_atom,
        "del_goal": cfg.w_del_goal,
    }
    if genome is not None and not len(genome):
        weights = {"add_goal": cfg.w_add_goal}
    names = [m for m in MUTATIONS if weights.get(m)]
    if not names:
        return None
    return rng.choices(names, weights=[weights[m] for m in names])[0]


def _bounds(genome: Genome, i: int):
    lo = genome.stations[i - 1].key if i > 0 else Fraction(0)
    hi = genome.stations[i + 1].key if i + 1 < len(genome) else INF
    return lo, hi


def _replace_station(genome: Genome, i: int, station: Station | None) -> Genome:
    st = list(genome.stations)
    if station is None:
        del st[i]
    else:
        st[i] = station
    return Genome(tuple(st))


def _add_goal(genome, cfg, rng, space):
    i = rng.randint(0, len(genome))
    lo = genome.stations[i - 1].key if i > 0 else space.dates[0]
    hi = genome.stations[i].key if i < len(genome) else space.dates[-1]
    # the Radius nearest later dates of the insertion point
    dates = space.dates_between(lo, hi)[: cfg.radius]
    if not dates:
        return None
    station = space.random_station(rng, rng.choice(dates), cfg.radius)
    return Genome(genome.stations[:i] + (station,) + genome.stations[i:])


def _del_goal(genome, cfg, rng, space):
    return _replace_station(genome, rng.randrange(len(genome)), None)


def _add_atom(genome, cfg, rng, space):
    i = rng.randrange(len(genome))
    lo, hi = _bounds(genome, i)
    pool = space.atoms_from(lo)
    atoms = list(genome.stations[i].atoms)
    for j, a in enumerate(atoms):
        if rng.random() < cfg.proba_change:
            others = atoms[:j] + atoms[j + 1:]
            cands = [b for b in pool if b not in atoms and space.compatible(b, others)]
            if cands:
                atoms[j] = rng.choice(cands)
    cands = [b for b in pool if b not in atoms and space.compatible(b, atoms)]
    if cands:
        atoms.append(rng.choice(cands))
    station = space.station(atoms)
    if not lo <= station.key <= hi:
        return None
    return _replace_station(genome, i, station)


def _del_atom(genome, cfg, rng, space):
    i = rng.randrange(len(genome))
    lo, hi = _bounds(genome, i)
    atoms = list(genome.stations[i].atoms)
    keep = [a for a in atoms if rng.random() >= cfg.proba_delatom]
    if len(keep) == len(atoms):
        keep.pop(rng.randrange(len(keep)))
    if not keep:
        return _replace_station(genome, i, None)
    station = space.station(keep)
    if not lo <= station.key <= hi:
        return None
    return _replace_station(genome, i, station)


_OPERATORS = {"add_atom": _add_atom, "add_goal": _add_goal, "del_atom": _del_atom, "del_goal": _del_goal}


def mutate(
    genome: Genome, cfg: DaEConfig, rng: random.Random, space: GenomeSpace, op: str | None = None
) -> Genome:
    """Apply one of the four mutations, chosen by relative weight.

    Returns the genome unchanged when no operator applies or every retry
    would break time consistency.
    """
    op = op or choose_mutation(cfg, rng, genome)
    if op is None or (op != "add_goal" and not len(genome)):
        return genome
    for _ in range(MUTATION_RETRIES):
        child = _OPERATORS[op](genome, cfg, rng, space)
        if child is not None and child.is_time_consistent():
            return child
    return genome


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class EvaluatedIndividual:
    genome: Genome
    feasible: bool
    makespan: Fraction | None
    cost: Fraction | None
    fitness: Fraction
    unsolved: int = 0
    strategy: str = Strategy.MAKESPAN.value
    plan: Plan | None = field(default=None, compare=False, repr=False)

    @property
    def point(self) -> ObjectivePoint | None:
        return ObjectivePoint(self.makespan, self.cost) if self.feasible else None


def _rational_alpha(alpha) -> Fraction:
    a = Fraction(repr(alpha)) if isinstance(alpha, float) else Fraction(alpha)
    if not 0 <= a <= 1:
        raise ValueError(f"alpha={alpha} outside [0, 1]")
    return a


def evaluate(
    task: PlanningTask,
    genome: Genome,
    cfg: DaEConfig,
    alpha,
    rng: random.Random,
    planner: SubPlanner | None = None,
    max_nodes: int = DEFAULT_MAX_NODES,
    check: bool = True,
    scales=None,
) -> EvaluatedIndividual:
    """Solve the station chain and score the compressed plan with F_alpha.

    ``scales=(m0, c0)`` divides makespan and cost before weighting (off by
    default).
    """
    alpha = _rational_alpha(alpha)
    planner = planner or SubPlanner(task)
    strategy = Strategy.MAKESPAN if rng.random() < cfg.p_makespan else Strategy.COST
    ct = planner.ct
    targets = [ct.mask(s.atoms) for s in genome.stations] + [ct.mask(task.goal)]
    state = ct.mask(task.initial)
    indices: list[int] = []
    for k, target in enumerate(targets):
        try:
            steps = planner.solve_masks(state, target, strategy, max_nodes)
        except Unsolved:
            unsolved = len(targets) - k
            return EvaluatedIndividual(
                genome, False, None, None, Fraction(PENALTY_BASE + unsolved), unsolved, strategy.value
            )
        for a in steps:
            state = ct.apply(state, a)
        indices.extend(steps)
    plan = compress(task, [Plan.sequential(ct.actions[k] for k in indices)])
    if check:
        v = validate_plan(task, plan)
        if not v.valid:
            raise AssertionError(f"compressed plan invalid: {v.violations}")
    m, c = plan.makespan, plan.cost
    if scales is None:
        f = scalar_fitness(alpha, m, c)
    else:
        f = scalar_fitness(alpha, m / Fraction(scales[0]), c / Fraction(scales[1]))
    return EvaluatedIndividual(genome, True, m, c, f, 0, strategy.value, plan)


# ---------------------------------------------------------------------------
# run loop


@dataclass(frozen=True)
class Budget:
    """Stopping rule. ``seconds`` is measured on ``clock``: ``"effort"`` (sub-planner
    work converted to seconds, deterministic) or ``"cpu"`` (process CPU time)."""

    seconds: float | None = None
    evaluations: int | None = None
    clock: str = "effort"

    def __post_init__(self):
        if self.clock not in ("effort", "cpu"):
            raise ValueError(f"unknown clock {self.clock!r}")
        if self.seconds is not None and self.seconds < 0:
            raise ValueError("negative time budget")
        if self.evaluations is not None and self.evaluations < 0:
            raise ValueError("negative evaluation budget")


class EffortClock:
    def __init__(self, planner: SubPlanner, clock: str = "effort"):
        self.planner = planner
        self.clock = clock
        ct = planner.ct
        self._expansion_cost = EXPANSION_SECONDS * len(ct.actions) * len(ct.atoms)
        self.evaluations = 0
        self.plan_actions = 0
        self._cpu0 = time.process_time()

    def seconds(self) -> float:
        if self.clock == "cpu":
            return time.process_time() - self._cpu0
        p = self.planner
        return p.expanded * self._expansion_cost + p.calls * SUBSOLVE_SECONDS

    def exhausted(self, budget: Budget) -> bool:
        if budget.evaluations is not None and self.evaluations >= budget.evaluations:
            return True
        return budget.seconds is not None and self.seconds() >= budget.seconds


@dataclass(frozen=True)
class Snapshot:
    t_seconds: float
    evals: int
    best_fitness: float
    points: tuple[tuple[float, float], ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "t_seconds": self.t_seconds,
                "evals": self.evals,
                "best_fitness": self.best_fitness,
                "points": [list(p) for p in self.points],
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_dict(cls, d: dict) -> "Snapshot":
        return cls(
            float(d["t_seconds"]),
            int(d["evals"]),
            float(d["best_fitness"]),
            tuple((float(m), float(c)) for m, c in d["points"]),
        )


@dataclass
class RunTrace:
    snapshots: list[Snapshot] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def to_jsonl(self) -> str:
        return "".join(s.to_json() + "\n" for s in self.snapshots)

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def read(cls, path, meta: dict | None = None) -> "RunTrace":
        snaps = [
            Snapshot.from_dict(json.loads(line))
            for line in Path(path).read_text().splitlines()
            if line.strip()
        ]
        return cls(snaps, dict(meta or {}))


@dataclass
class DaEResult:
    population: list[EvaluatedIndividual]
    best: EvaluatedIndividual
    trace: RunTrace
    evaluations: int
    strategy_counts: dict
    seconds: float
    counters: dict = field(default_factory=dict)

    @property
    def points(self) -> list[ObjectivePoint]:
        """Objective points of the final population plus the best-ever individual."""
        pts = {ind.point for ind in self.population if ind.feasible}
        if self.best.feasible:
            pts.add(self.best.point)
        return sorted(pts)


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary printable parts."""
    h = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(h[:8], "big") >> 1


def _snapshot(population, clock: EffortClock, best) -> Snapshot:
    pts = sorted({(float(i.makespan), float(i.cost)) for i in population if i.feasible})
    return Snapshot(round(clock.seconds(), 6), clock.evaluations, float(best.fitness), tuple(pts))


def _tournament(pop: Sequence[EvaluatedIndividual], rng: random.Random) -> EvaluatedIndividual:
    a, b = rng.randrange(len(pop)), rng.randrange(len(pop))
    return pop[a] if pop[a].fitness <= pop[b].fitness else pop[b]


def _survivors(merged: list[EvaluatedIndividual], mu: int) -> list[EvaluatedIndividual]:
    merged = sorted(merged, key=lambda i: i.fitness)
    seen = set()
    first, dup = [], []
    for ind in merged:
        key = (ind.genome, ind.makespan, ind.cost)
        (dup if key in seen else first).append(ind)
        seen.add(key)
    return (first + dup)[:mu]


def run_dae(
    task: PlanningTask,
    cfg: DaEConfig,
    alpha,
    budget: Budget,
    seed: int = 0,
    max_nodes: int = DEFAULT_MAX_NODES,
    space: GenomeSpace | None = None,
    callback: Callable[[Snapshot], None] | None = None,
    target_fitness=None,
    scales=None,
) -> DaEResult:
    """Generational DaE: binary tournament, crossover and mutation gates per
    offspring, (mu + lambda) elitist replacement. Deterministic given ``seed``
    when the effort clock is used.

    ``target_fitness`` stops the run at the end of the first generation whose
    best F_alpha is at or below it.
    """
    alpha = _rational_alpha(alpha)
    rng = random.Random(derive_seed(seed, "dae"))
    planner = SubPlanner(task, seed=derive_seed(seed, "yahsp"))
    space = space or GenomeSpace(task)
    clock = EffortClock(planner, budget.clock)

    def _eval(genome: Genome) -> EvaluatedIndividual:
        sub = random.Random(derive_seed(seed, "eval", clock.evaluations))
        ind = evaluate(task, genome, cfg, alpha, sub, planner, max_nodes, scales=scales)
        clock.evaluations += 1
        if ind.plan is not None:
            clock.plan_actions += len(ind.plan.steps)
        return ind

    population = [_eval(init_genome(space, rng)) for _ in range(cfg.pop_size)]
    best = min(population, key=lambda i: i.fitness)
    trace = RunTrace(meta={"alpha": float(alpha), "seed": seed})
    trace.snapshots.append(_snapshot(population, clock, best))
    if callback:
        callback(trace.snapshots[-1])
    def _done() -> bool:
        if target_fitness is not None and best.fitness <= target_fitness:
            return True
        return clock.exhausted(budget)

    while not _done():
        offspring = []
        for _ in range(cfg.pop_size):
            if clock.exhausted(budget):
                break
            child = _tournament(population, rng).genome
            if rng.random() < cfg.proba_cross:
                child = crossover(child, _tournament(population, rng).genome, rng)
            if rng.random() < cfg.proba_mut:
                child = mutate(child, cfg, rng, space)
            offspring.append(_eval(child))
        population = _survivors(population + offspring, cfg.pop_size)
        if population[0].fitness < best.fitness:
            best = population[0]
        trace.snapshots.append(_snapshot(population, clock, best))
        if callback:
            callback(trace.snapshots[-1])
    return DaEResult(
        population,
        best,
        trace,
        clock.evaluations,
        dict(planner.strategy_counts),
        clock.seconds(),
        {
            "expanded": planner.expanded,
            "cache_hits": planner.cache_hits,
            "calls": planner.calls,
            "plan_actions": clock.plan_actions,
            "evaluations": clock.evaluations,
        },
    )
