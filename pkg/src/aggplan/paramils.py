"""BasicILS configurator over a finite one-exchange parameter space.

Quality is lower-is-better and is either the mean best F_alpha of seeded DaE
runs or the mean unary hypervolume of their final populations. The budget is
the number of distinct configurations evaluated.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .dae import TABLE1, Budget, DaEConfig, derive_seed, run_dae
from .metrics import default_reference_point, unary_hypervolume
from .planning import PlanningTask

Config = dict
STALE_LIMIT = 100_000


@dataclass(frozen=True)
class Parameter:
    name: str
    values: tuple

    def __post_init__(self):
        if len(set(self.values)) != len(self.values) or not self.values:
            raise ValueError(f"parameter {self.name}: values must be unique and nonempty")


class ParamSpace:
    """Ordered finite parameters with an optional forbidden-combination rule."""

    def __init__(self, params: Sequence[Parameter], forbidden: Callable[[Config], bool] | None = None, default: Config | None = None):
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.params = tuple(params)
        self.forbidden = forbidden
        self._by_name = {p.name: p for p in self.params}
        self.default = dict(default) if default is not None else {p.name: p.values[0] for p in self.params}
        if not self.is_valid(self.default):
            raise ValueError("default configuration is not valid in this space")

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def size(self) -> int:
        """Size of the full grid (forbidden combinations included)."""
        return math.prod(len(p.values) for p in self.params)

    def is_valid(self, cfg: Mapping) -> bool:
        if set(cfg) != set(self._by_name):
            return False
        if any(cfg[n] not in self._by_name[n].values for n in cfg):
            return False
        return not (self.forbidden and self.forbidden(cfg))

    def random(self, rng: random.Random) -> Config:
        while True:
            cfg = {p.name: rng.choice(p.values) for p in self.params}
            if self.is_valid(cfg):
                return cfg

    def neighbors(self, cfg: Mapping) -> list[Config]:
        """All valid configurations differing from ``cfg`` in exactly one value."""
        out = []
        for p in self.params:
            for v in p.values:
                if v != cfg[p.name]:
                    nb = dict(cfg)
                    nb[p.name] = v
                    if self.is_valid(nb):
                        out.append(nb)
        return out

    def key(self, cfg: Mapping) -> tuple:
        return tuple(cfg[n] for n in self.names)


def table1_space() -> ParamSpace:
    params = [Parameter(name, tuple(values)) for name, values in TABLE1.items()]
    return ParamSpace(
        params,
        forbidden=lambda c: c["w_makespan"] + c["w_cost"] == 0,
        default=DaEConfig().to_dict(),
    )


# ---------------------------------------------------------------------------
# targets


@dataclass(frozen=True)
class QualityMeasure:
    kind: str = "fitness"
    reference: tuple = ()
    ref_point: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("fitness", "hypervolume"):
            raise ValueError(f"unknown quality measure {self.kind!r}")
        if self.kind == "hypervolume" and not self.reference:
            raise ValueError("hypervolume measure needs a reference front")
        object.__setattr__(self, "reference", tuple(self.reference))
        if self.kind == "hypervolume" and self.ref_point is None:
            object.__setattr__(self, "ref_point", tuple(default_reference_point(self.reference)))

    def score(self, result) -> Fraction:
        if self.kind == "fitness":
            return Fraction(result.best.fitness)
        return unary_hypervolume(result.points, self.reference, self.ref_point)


@dataclass(frozen=True)
class Target:
    task: PlanningTask
    alpha: Fraction
    budget: Budget
    max_nodes: int = 100


def _run(args):
    target, cfg, measure, seed = args
    res = run_dae(target.task, cfg, target.alpha, target.budget, seed=seed, max_nodes=target.max_nodes)
    return measure.score(res), res.seconds


def evaluate_config(cfg, target: Target, measure: QualityMeasure, n_runs: int = 1, seeds: Sequence[int] | None = None, workers: int = 1):
    """Mean quality over ``n_runs`` seeded DaE runs; returns (quality, seconds)."""
    if isinstance(cfg, Mapping):
        cfg = DaEConfig.from_dict(cfg)
    seeds = list(range(n_runs)) if seeds is None else list(seeds)[:n_runs]
    if len(seeds) != n_runs:
        raise ValueError("need one seed per run")
    jobs = [(target, cfg, measure, s) for s in seeds]
    if workers > 1 and n_runs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_run, jobs))
    else:
        out = [_run(j) for j in jobs]
    return sum((q for q, _ in out), Fraction(0)) / n_runs, sum(t for _, t in out)


class DaEObjective:
    """Callable config -> quality with the same pre-drawn seeds for every config."""

    def __init__(self, target: Target, measure: QualityMeasure, n_runs: int = 1, seed: int = 0, workers: int = 1):
        self.target = target
        self.measure = measure
        self.n_runs = n_runs
        self.seeds = [derive_seed(seed, "tune-run", k) for k in range(n_runs)]
        self.workers = workers
        self.last_seconds = 0.0

    def __call__(self, cfg: Mapping) -> Fraction:
        q, self.last_seconds = evaluate_config(dict(cfg), self.target, self.measure, self.n_runs, self.seeds, self.workers)
        return q


# ---------------------------------------------------------------------------
# BasicILS


@dataclass(frozen=True)
class EvalRecord:
    eval_index: int
    config: dict
    quality: Fraction
    incumbent_quality: Fraction
    seeds: tuple = ()
    seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "eval_index": self.eval_index,
                "config": self.config,
                "quality": float(self.quality),
                "incumbent": float(self.incumbent_quality),
            },
            sort_keys=False,
            separators=(",", ":"),
        )


@dataclass(frozen=True)
class Move:
    phase: int
    current_quality: Fraction
    quality: Fraction
    accepted: bool


@dataclass
class TuneResult:
    incumbent: dict
    quality: Fraction
    log: list[EvalRecord] = field(default_factory=list)
    moves: list[Move] = field(default_factory=list)

    @property
    def evaluations(self) -> int:
        return len(self.log)

    @property
    def incumbent_trajectory(self) -> list[Fraction]:
        return [r.incumbent_quality for r in self.log]

    def config(self) -> DaEConfig:
        return DaEConfig.from_dict(self.incumbent)

    def write_log(self, path) -> None:
        Path(path).write_text("".join(r.to_json() + "\n" for r in self.log))


class _BudgetSpent(Exception):
    pass


class _Tuner:
    def __init__(self, space, objective, budget, rng, log_fh=None, seeds=()):
        self.space = space
        self.objective = objective
        self.budget = budget
        self.rng = rng
        self.cache: dict[tuple, Fraction] = {}
        self.log: list[EvalRecord] = []
        self.moves: list[Move] = []
        self.best = None
        self.best_q = None
        self.log_fh = log_fh
        self.seeds = tuple(seeds)
        self.phase = 0
        self.stale = 0

    def quality(self, cfg) -> Fraction:
        key = self.space.key(cfg)
        if key in self.cache:
            # a small space can be exhausted before the budget
            self.stale += 1
            if self.stale > STALE_LIMIT:
                raise _BudgetSpent
            return self.cache[key]
        self.stale = 0
        if len(self.log) >= self.budget:
            raise _BudgetSpent
        q = Fraction(self.objective(cfg))
        self.cache[key] = q
        if self.best_q is None or q < self.best_q:
            self.best, self.best_q = dict(cfg), q
        rec = EvalRecord(len(self.log), dict(cfg), q, self.best_q, self.seeds, getattr(self.objective, "last_seconds", 0.0))
        self.log.append(rec)
        if self.log_fh is not None:
            self.log_fh.write(rec.to_json() + "\n")
            self.log_fh.flush()
        return q

    def first_improvement(self, cfg):
        q = self.quality(cfg)
        self.phase += 1
        improved = True
        while improved:
            improved = False
            nbs = self.space.neighbors(cfg)
            self.rng.shuffle(nbs)
            for nb in nbs:
                qn = self.quality(nb)
                ok = qn < q
                self.moves.append(Move(self.phase, q, qn, ok))
                if ok:
                    cfg, q, improved = nb, qn, True
                    break
        return cfg, q


def tune(
    space: ParamSpace,
    objective: Callable[[Mapping], object],
    budget: int,
    seed: int = 0,
    r: int = 10,
    s: int = 3,
    p_restart: float = 0.01,
    log_path=None,
) -> TuneResult:
    """BasicILS: default plus ``r`` random starts, first-improvement one-exchange
    descent, ``s`` random steps of perturbation, restart with ``p_restart``."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = random.Random(derive_seed(seed, "paramils"))
    fh = open(log_path, "w") if log_path is not None else None
    seeds = tuple(getattr(objective, "seeds", ()))
    t = _Tuner(space, objective, budget, rng, fh, seeds)
    try:
        start = dict(space.default)
        q0 = t.quality(start)
        for _ in range(r):
            cand = space.random(rng)
            qc = t.quality(cand)
            if qc < q0:
                start, q0 = cand, qc
        cur, cq = t.first_improvement(start)
        while True:
            cand = dict(cur)
            for _ in range(s):
                nbs = space.neighbors(cand)
                if nbs:
                    cand = rng.choice(nbs)
            cand, qc = t.first_improvement(cand)
            if qc < cq:
                cur, cq = cand, qc
            if rng.random() < p_restart:
                cur = space.random(rng)
                cur, cq = t.first_improvement(cur)
    except _BudgetSpent:
        pass
    finally:
        if fh is not None:
            fh.close()
    return TuneResult(t.best, t.best_q, t.log, t.moves)
