"""Aggregated multi-objective planning: one DaE run per weight alpha, final
populations merged and filtered for dominance."""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .dae import Budget, DaEConfig, DaEResult, RunTrace, run_dae, scalar_fitness
from .metrics import nondominated
from .objectives import ObjectivePoint, ParetoFront
from .planning import PlanningTask

DEFAULT_ALPHAS = ("0", "0.05", "0.1", "0.3", "0.5", "0.55", "0.7", "1.0")
PARTIAL_RESULTS = "partial_results.json"

__all__ = [
    "AlphaSchedule",
    "AggregationError",
    "AggregatedResult",
    "run_aggregated",
    "scalar_fitness",
    "merge_fronts",
]


class AggregationError(RuntimeError):
    def __init__(self, message: str, partial_path=None):
        super().__init__(message)
        self.partial_path = partial_path


def _alpha(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x).strip()) if isinstance(x, str) else Fraction(x)


@dataclass(frozen=True)
class AlphaSchedule:
    alphas: tuple[Fraction, ...] = tuple(Fraction(a) for a in DEFAULT_ALPHAS)

    def __post_init__(self):
        alphas = tuple(_alpha(a) for a in self.alphas)
        if not alphas:
            raise ValueError("alpha schedule is empty")
        if any(not 0 <= a <= 1 for a in alphas):
            raise ValueError("alpha values must lie in [0, 1]")
        if any(a >= b for a, b in zip(alphas, alphas[1:])):
            raise ValueError("alpha values must be strictly increasing")
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def parse(cls, text: str) -> "AlphaSchedule":
        """Comma-separated list, e.g. ``"0,0.5,1"``."""
        return cls(tuple(t for t in text.replace(" ", "").split(",") if t))

    def __iter__(self):
        return iter(self.alphas)

    def __len__(self) -> int:
        return len(self.alphas)

    def labels(self) -> list[str]:
        return [format_alpha(a) for a in self.alphas]


def format_alpha(a) -> str:
    return repr(float(_alpha(a)))


def merge_fronts(point_sets) -> ParetoFront:
    merged = []
    for pts in point_sets:
        merged.extend(pts)
    return nondominated(merged)


@dataclass
class AggregatedResult:
    front: ParetoFront
    schedule: AlphaSchedule
    runs: list[DaEResult]
    seeds: list[int]

    @property
    def traces(self) -> dict[str, RunTrace]:
        return {format_alpha(a): r.trace for a, r in zip(self.schedule, self.runs)}

    @property
    def cpu_seconds(self) -> float:
        """Total time as the sum of per-run times (not wall-clock)."""
        return sum(r.seconds for r in self.runs)

    def final_points(self) -> list[list[ObjectivePoint]]:
        return [r.points for r in self.runs]


def _config_for(cfgs, i: int, alpha) -> DaEConfig:
    if isinstance(cfgs, DaEConfig):
        return cfgs
    if isinstance(cfgs, Mapping):
        for key in (alpha, format_alpha(alpha), float(alpha)):
            if key in cfgs:
                return cfgs[key]
        raise KeyError(f"no configuration for alpha={format_alpha(alpha)}")
    return cfgs[i]


def _run_one(args):
    task, cfg, alpha, budget, seed, max_nodes, scales = args
    return run_dae(task, cfg, alpha, budget, seed=seed, max_nodes=max_nodes, scales=scales)


def _write_partial(path: Path, schedule, done: dict, error: str) -> None:
    payload = {
        "error": error,
        "completed": [
            {
                "alpha": format_alpha(schedule.alphas[i]),
                "evaluations": r.evaluations,
                "points": [[float(p.makespan), float(p.cost)] for p in r.points],
            }
            for i, r in sorted(done.items())
        ],
        "missing": [format_alpha(a) for i, a in enumerate(schedule) if i not in done],
    }
    path.write_text(json.dumps(payload, indent=1) + "\n")


def run_aggregated(
    task: PlanningTask,
    cfgs,
    schedule: AlphaSchedule | Sequence | None = None,
    budget: Budget | None = None,
    seeds: Sequence[int] | None = None,
    workers: int = 1,
    out_dir=None,
    max_nodes: int = 100,
    normalize: bool = False,
    scales=None,
) -> AggregatedResult:
    """Run one independent DaE per alpha and merge their final populations.

    ``cfgs`` is one DaEConfig for all alphas, a sequence aligned with the
    schedule, or a mapping keyed by alpha. With ``normalize`` the objectives
    are divided by ``scales`` (required then) before weighting.

    If a run raises, a partial-results file is written to ``out_dir`` (when
    given) and :class:`AggregationError` is raised.
    """
    if schedule is None:
        schedule = AlphaSchedule()
    elif not isinstance(schedule, AlphaSchedule):
        schedule = AlphaSchedule(tuple(schedule))
    budget = budget or Budget(evaluations=1000)
    seeds = list(range(len(schedule))) if seeds is None else list(seeds)
    if len(seeds) != len(schedule):
        raise ValueError("need one seed per alpha")
    if normalize and scales is None:
        raise ValueError("normalize=True needs scales=(makespan0, cost0)")
    jobs = [
        (task, _config_for(cfgs, i, a), a, budget, seeds[i], max_nodes, scales if normalize else None)
        for i, a in enumerate(schedule)
    ]
    done: dict[int, DaEResult] = {}
    try:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(workers, len(jobs), os.cpu_count() or 1)) as pool:
                futures = [pool.submit(_run_one, j) for j in jobs]
                for i, fut in enumerate(futures):
                    done[i] = fut.result()
        else:
            for i, j in enumerate(jobs):
                done[i] = _run_one(j)
    except Exception as exc:
        partial = None
        if out_dir is not None:
            partial = Path(out_dir) / PARTIAL_RESULTS
            partial.parent.mkdir(parents=True, exist_ok=True)
            _write_partial(partial, schedule, done, f"{type(exc).__name__}: {exc}")
        raise AggregationError(f"alpha-run failed: {exc}", partial) from exc
    runs = [done[i] for i in range(len(jobs))]
    front = merge_fronts(r.points for r in runs)
    return AggregatedResult(front, schedule, runs, seeds)
