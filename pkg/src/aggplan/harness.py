"""Campaign orchestration: manifests, seeded aggregated campaigns, tuning
campaigns, trace-derived metrics and plot-ready reports.

Output layout of a campaign directory::

    manifest.json              the manifest actually run
    campaign.log               timestamp line, then per-repetition summary
    traces/rep-00_alpha-0.5.jsonl
    fronts/rep-00.csv          merged front of one repetition
    metrics/*.csv              written by ``eval``
    report/*.csv               written by ``report``
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import re
from bisect import bisect_right
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from statistics import median

from .aggregation import AlphaSchedule, format_alpha, merge_fronts, run_aggregated
from .dae import Budget, DaEConfig, RunTrace, derive_seed
from .metrics import (
    default_reference_point,
    hitting_table,
    nondominated,
    sample_median,
    unary_hypervolume,
    wilcoxon_signed_rank,
)
from .multizeno import ZenoSpec, build_task, exact_front, front_provenance
from .objectives import ObjectivePoint, format_number, read_front_csv, write_front_csv
from .paramils import DaEObjective, QualityMeasure, Target, table1_space, tune

DESK_BUDGETS = {3: 60.0, 6: 120.0, 9: 300.0}
DEFAULT_REPETITIONS = 11
REPORT_GRID = 100


class HarnessError(RuntimeError):
    """Malformed manifest, missing input or aborted campaign."""


# ---------------------------------------------------------------------------
# instances and manifests


def instance_to_dict(spec: ZenoSpec) -> dict:
    return {
        "passengers": spec.passengers,
        "planes": spec.planes,
        "legs": [format_number(x) for x in spec.legs],
        "taxes": [format_number(x) for x in spec.taxes],
    }


def instance_from_dict(d) -> ZenoSpec:
    if isinstance(d, str):
        return ZenoSpec.named(d)
    if not isinstance(d, dict):
        raise HarnessError(f"instance must be a name or an object, got {d!r}")
    d = dict(d)
    name = d.pop("name", None)
    tax2 = d.pop("tax2", None)
    try:
        if name is not None:
            spec = ZenoSpec.named(name, tax2=tax2)
            return replace(spec, **d) if d else spec
        return ZenoSpec(**d, tax2=tax2)
    except TypeError as exc:
        raise HarnessError(f"bad instance description: {exc}") from exc


@dataclass
class CampaignManifest:
    instance: ZenoSpec = field(default_factory=ZenoSpec)
    schedule: AlphaSchedule = field(default_factory=AlphaSchedule)
    configs: dict = field(default_factory=dict)
    config_source: str = "explicit"
    tuned_dir: str | None = None
    budget_seconds: float | None = 60.0
    budget_evaluations: int | None = None
    clock: str = "effort"
    repetitions: int = DEFAULT_REPETITIONS
    seed_root: int = 0
    out: str = "campaign"
    workers: int = 1
    max_nodes: int = 100
    kind: str = "aggregate"

    def __post_init__(self):
        if self.repetitions < 1:
            raise HarnessError("repetitions must be >= 1")
        if self.budget_seconds is None and self.budget_evaluations is None:
            raise HarnessError("a time or evaluation budget is required")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise HarnessError("budget_seconds must be > 0")
        if self.budget_evaluations is not None and self.budget_evaluations <= 0:
            raise HarnessError("budget_evaluations must be > 0")
        if self.config_source not in ("explicit", "tuned"):
            raise HarnessError(f"config_source must be explicit or tuned, not {self.config_source!r}")
        if self.config_source == "tuned" and not self.tuned_dir:
            raise HarnessError("config_source=tuned needs tuned_dir")

    @property
    def budget(self) -> Budget:
        return Budget(self.budget_seconds, self.budget_evaluations, self.clock)

    def config_for(self, alpha) -> DaEConfig:
        label = format_alpha(alpha)
        if self.config_source == "tuned":
            path = Path(self.tuned_dir) / f"alpha-{label}.json"
            if not path.exists():
                raise HarnessError(f"missing tuned configuration {path}")
            return DaEConfig.from_dict(json.loads(path.read_text())["config"])
        raw = self.configs.get(label, self.configs.get("default", {}))
        return DaEConfig.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "instance": instance_to_dict(self.instance),
            "alpha_schedule": self.schedule.labels(),
            "config_source": self.config_source,
            "configs": self.configs,
            "tuned_dir": self.tuned_dir,
            "budget_seconds": self.budget_seconds,
            "budget_evaluations": self.budget_evaluations,
            "clock": self.clock,
            "repetitions": self.repetitions,
            "seed_root": self.seed_root,
            "out": self.out,
            "workers": self.workers,
            "max_nodes": self.max_nodes,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignManifest":
        if not isinstance(d, dict):
            raise HarnessError("manifest must be a JSON object")
        known = {
            "kind", "instance", "alpha_schedule", "config_source", "configs", "tuned_dir",
            "budget_seconds", "budget_evaluations", "clock", "repetitions", "seed_root",
            "out", "workers", "max_nodes",
        }
        unknown = set(d) - known
        if unknown:
            raise HarnessError(f"unknown manifest keys: {sorted(unknown)}")
        try:
            sched = d.get("alpha_schedule")
            if isinstance(sched, str):
                schedule = AlphaSchedule.parse(sched)
            else:
                schedule = AlphaSchedule(tuple(sched)) if sched is not None else AlphaSchedule()
            m = cls(
                instance=instance_from_dict(d.get("instance", "zeno3")),
                schedule=schedule,
                configs=dict(d.get("configs") or {}),
                config_source=d.get("config_source", "explicit"),
                tuned_dir=d.get("tuned_dir"),
                budget_seconds=d.get("budget_seconds", 60.0),
                budget_evaluations=d.get("budget_evaluations"),
                clock=d.get("clock", "effort"),
                repetitions=int(d.get("repetitions", DEFAULT_REPETITIONS)),
                seed_root=int(d.get("seed_root", 0)),
                out=d.get("out", "campaign"),
                workers=int(d.get("workers", 1)),
                max_nodes=int(d.get("max_nodes", 100)),
                kind=d.get("kind", "aggregate"),
            )
            if m.config_source == "explicit":
                for a in m.schedule:
                    m.config_for(a)
            m.budget
        except HarnessError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise HarnessError(f"malformed manifest: {exc}") from exc
        return m

    @classmethod
    def load(cls, path) -> "CampaignManifest":
        path = Path(path)
        if not path.exists():
            raise HarnessError(f"manifest {path} not found")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise HarnessError(f"manifest {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def run_seed(seed_root: int, kind: str, alpha_index: int, repetition: int) -> int:
    """seed(run) = hash(seed root, run kind, alpha index, repetition)."""
    return derive_seed(seed_root, kind, alpha_index, repetition)


# ---------------------------------------------------------------------------
# campaigns


def trace_path(out: Path, rep: int, alpha) -> Path:
    return out / "traces" / f"rep-{rep:02d}_alpha-{format_alpha(alpha)}.jsonl"


def _timestamp() -> str:
    return f"# created {_dt.datetime.now().isoformat(timespec='seconds')}\n"


def run_campaign(manifest: CampaignManifest, out=None, log=None) -> Path:
    """Run every repetition of an aggregated campaign; returns the output dir."""
    out = Path(out or manifest.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "fronts").mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(manifest.dumps())
    task = build_task(manifest.instance)
    cfgs = [manifest.config_for(a) for a in manifest.schedule]
    summary = [_timestamp()]
    for rep in range(manifest.repetitions):
        seeds = [run_seed(manifest.seed_root, manifest.kind, i, rep) for i in range(len(manifest.schedule))]
        try:
            res = run_aggregated(
                task,
                cfgs,
                manifest.schedule,
                manifest.budget,
                seeds,
                workers=manifest.workers,
                out_dir=out,
                max_nodes=manifest.max_nodes,
            )
        except Exception as exc:
            raise HarnessError(f"repetition {rep} aborted: {exc}") from exc
        for a, r in zip(manifest.schedule, res.runs):
            r.trace.write(trace_path(out, rep, a))
        write_front_csv(out / "fronts" / f"rep-{rep:02d}.csv", res.front)
        line = f"rep {rep}: {len(res.front)} points, {res.cpu_seconds:.3f} s total\n"
        summary.append(line)
        if log:
            log(line.rstrip())
    (out / "campaign.log").write_text("".join(summary))
    return out


def load_traces(campaign) -> dict[tuple[int, str], RunTrace]:
    campaign = Path(campaign)
    tdir = campaign / "traces"
    if not tdir.is_dir():
        raise HarnessError(f"{campaign} has no traces directory")
    out = {}
    for p in sorted(tdir.glob("rep-*_alpha-*.jsonl")):
        m = re.fullmatch(r"rep-(\d+)_alpha-(.+)\.jsonl", p.name)
        if m:
            out[(int(m.group(1)), m.group(2))] = RunTrace.read(p)
    if not out:
        raise HarnessError(f"no traces found in {tdir}")
    return out


def reference_for(campaign) -> tuple[list[ObjectivePoint], tuple]:
    manifest = CampaignManifest.load(Path(campaign) / "manifest.json")
    front = list(exact_front(manifest.instance))
    return front, tuple(default_reference_point(front))


# ---------------------------------------------------------------------------
# metrics from traces


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, Fraction):
        return repr(float(x))
    if x is None:
        return ""
    return x


class _Timeline:
    """Snapshot populations and cumulative archives of one trace, by time."""

    def __init__(self, trace: RunTrace):
        self.times = [s.t_seconds for s in trace]
        self.pops = [s.points for s in trace]
        self.archives = []
        arc: list = []
        for s in trace:
            arc = list(nondominated(arc + list(s.points)))
            self.archives.append(arc)

    def _index(self, t: float) -> int:
        return bisect_right(self.times, t) - 1

    def population(self, t: float):
        i = self._index(t)
        return self.pops[i] if i >= 0 else ()

    def archive(self, t: float):
        i = self._index(t)
        return self.archives[i] if i >= 0 else []


def _grid(traces) -> list[float]:
    t_max = max(tr.final.t_seconds for tr in traces.values())
    return sorted({round(t_max * k / REPORT_GRID, 6) for k in range(REPORT_GRID + 1)} | {t_max})


def eval_campaign(campaign, out=None) -> Path:
    """Per-run I_H^- series, final overall values and hitting times."""
    campaign = Path(campaign)
    traces = load_traces(campaign)
    front, ref = reference_for(campaign)
    out = Path(out or campaign / "metrics")
    out.mkdir(parents=True, exist_ok=True)
    reps = sorted({r for r, _ in traces})

    rows = []
    for (rep, alpha), tr in sorted(traces.items()):
        archive = []
        for s in tr:
            archive = list(nondominated(archive + list(s.points)))
            rows.append(
                (rep, alpha, s.t_seconds, s.evals, s.best_fitness,
                 unary_hypervolume(s.points, front, ref), unary_hypervolume(archive, front, ref))
            )
    (out / "hypervolume_runs.csv").write_text(
        _csv(rows, ["rep", "alpha", "t_seconds", "evals", "best_fitness", "ih_population", "ih_archive"])
    )

    finals = []
    for rep in reps:
        merged = merge_fronts(tr.final.points for (r, _), tr in traces.items() if r == rep)
        finals.append((rep, len(merged), unary_hypervolume(merged, front, ref)))
    (out / "final.csv").write_text(_csv(finals, ["rep", "n_points", "ih_overall"]))

    # one run = one aggregated repetition; a point is hit when any of its
    # alpha-runs shows it, at that run's own elapsed time
    hit_rows = []
    for rep in reps:
        per_alpha = [tr for (r, _), tr in sorted(traces.items()) if r == rep]
        tables = hitting_table(per_alpha, front)
        for p, hits in tables.items():
            times = [h for _, h in hits if h is not None]
            hit_rows.append((p.makespan, p.cost, rep, min(times) if times else None))
    (out / "hitting.csv").write_text(_csv(hit_rows, ["makespan", "cost", "run", "first_hit_time"]))
    return out


def read_final_hypervolumes(metrics_dir) -> list[float]:
    with open(Path(metrics_dir) / "final.csv") as fh:
        return [float(r["ih_overall"]) for r in csv.DictReader(fh)]


def report_campaign(campaign, out=None) -> Path:
    """Plot-ready CSVs: hypervolume vs time (per alpha and overall),
    hitting ratios vs time and the merged front of every repetition."""
    campaign = Path(campaign)
    traces = load_traces(campaign)
    front, ref = reference_for(campaign)
    out = Path(out or campaign / "report")
    out.mkdir(parents=True, exist_ok=True)
    reps = sorted({r for r, _ in traces})
    alphas = sorted({a for _, a in traces}, key=float)
    grid = _grid(traces)
    lines = {k: _Timeline(tr) for k, tr in traces.items()}

    hv_rows = []
    for t in grid:
        for a in alphas:
            pop = [float(unary_hypervolume(lines[(r, a)].population(t), front, ref)) for r in reps]
            arc = [float(unary_hypervolume(lines[(r, a)].archive(t), front, ref)) for r in reps]
            hv_rows.append((t, a, median(pop), min(pop), max(pop), median(arc)))
        pop, arc = [], []
        for r in reps:
            pts, apts = [], []
            for a in alphas:
                pts.extend(lines[(r, a)].population(t))
                apts.extend(lines[(r, a)].archive(t))
            pop.append(float(unary_hypervolume(pts, front, ref)))
            arc.append(float(unary_hypervolume(apts, front, ref)))
        hv_rows.append((t, "overall", median(pop), min(pop), max(pop), median(arc)))
    (out / "hypervolume_vs_time.csv").write_text(
        _csv(hv_rows, ["t_seconds", "series", "median_ih_population", "min_ih_population", "max_ih_population", "median_ih_archive"])
    )

    first = {}
    for rep in reps:
        per_alpha = [traces[(rep, a)] for a in alphas]
        for p, hits in hitting_table(per_alpha, front).items():
            times = [h for _, h in hits if h is not None]
            first[(p, rep)] = min(times) if times else None
    hit_rows = []
    for t in grid:
        for p in front:
            n = sum(1 for rep in reps if first[(p, rep)] is not None and first[(p, rep)] <= t)
            hit_rows.append((t, p.makespan, p.cost, n / len(reps)))
    (out / "hitting_ratio.csv").write_text(_csv(hit_rows, ["t_seconds", "makespan", "cost", "ratio"]))

    front_rows = []
    for rep in reps:
        merged = merge_fronts(traces[(rep, a)].final.points for a in alphas)
        front_rows.extend((rep, p.makespan, p.cost) for p in merged)
    (out / "merged_fronts.csv").write_text(_csv(front_rows, ["rep", "makespan", "cost"]))
    return out


# ---------------------------------------------------------------------------
# tuning and comparison


def tune_campaign(
    spec: ZenoSpec,
    schedule: AlphaSchedule,
    measure_kind: str,
    evals_budget: int,
    run_budget: Budget,
    seed_root: int = 0,
    out=None,
    n_runs: int = 1,
    max_nodes: int = 100,
    workers: int = 1,
    log=None,
) -> dict[str, DaEConfig]:
    """Tune every alpha independently and write one config file per alpha."""
    task = build_task(spec)
    measure = QualityMeasure(measure_kind, tuple(exact_front(spec)) if measure_kind == "hypervolume" else ())
    space = table1_space()
    out = Path(out) if out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    result = {}
    for i, a in enumerate(schedule):
        label = format_alpha(a)
        kind = f"tune-{measure_kind}"
        objective = DaEObjective(
            Target(task, a, run_budget, max_nodes), measure, n_runs, run_seed(seed_root, kind, i, 0), workers
        )
        log_path = out / f"tune_alpha-{label}.jsonl" if out is not None else None
        res = tune(space, objective, evals_budget, seed=run_seed(seed_root, kind, i, 1), log_path=log_path)
        cfg = res.config()
        result[label] = cfg
        if out is not None:
            (out / f"alpha-{label}.json").write_text(
                json.dumps({"alpha": label, "measure": measure_kind, "quality": float(res.quality), "config": cfg.to_dict(labels=True)}, indent=1)
                + "\n"
            )
        if log:
            log(f"alpha {label}: quality {float(res.quality):g} after {res.evaluations} evaluations")
    if out is not None:
        (out / "configs.json").write_text(
            json.dumps({k: v.to_dict(labels=True) for k, v in result.items()}, indent=1) + "\n"
        )
    return result


@dataclass
class ComparisonReport:
    instance: str
    samples: dict            # approach -> list of per-campaign overall I_H^-
    p_value: float
    statistic: float
    reject: bool
    medians: dict
    direction_ok: bool       # median(hyper) <= median(fitness)

    def to_dict(self) -> dict:
        return asdict(self)


def compare_samples(fitness: list, hyper: list, instance: str = "") -> ComparisonReport:
    w = wilcoxon_signed_rank(hyper, fitness)
    med = {"fitness": sample_median(fitness), "hypervolume": sample_median(hyper)}
    return ComparisonReport(
        instance,
        {"fitness": [float(x) for x in fitness], "hypervolume": [float(x) for x in hyper]},
        w.p_value,
        w.statistic,
        w.reject,
        med,
        med["hypervolume"] <= med["fitness"],
    )


def reproduce_comparison(
    spec: ZenoSpec,
    out,
    run_budget: Budget,
    tune_budget: Budget,
    evals_budget: int = 12,
    repetitions: int = DEFAULT_REPETITIONS,
    seed_root: int = 0,
    schedule: AlphaSchedule | None = None,
    configs: dict | None = None,
    workers: int = 1,
    log=None,
) -> ComparisonReport:
    """Tune per alpha under both quality measures (unless ``configs`` gives
    ``{"fitness": {...}, "hypervolume": {...}}``), run paired aggregated
    campaigns, and test the final overall I_H^- samples."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    schedule = schedule or AlphaSchedule()
    samples = {}
    for kind in ("fitness", "hypervolume"):
        if configs is not None:
            cfg_map = configs[kind]
        else:
            cfg_map = tune_campaign(
                spec, schedule, kind, evals_budget, tune_budget, seed_root, out / f"tuned-{kind}", workers=1, log=log
            )
        manifest = CampaignManifest(
            instance=spec,
            schedule=schedule,
            configs={k: (v.to_dict(labels=True) if isinstance(v, DaEConfig) else v) for k, v in cfg_map.items()},
            budget_seconds=run_budget.seconds,
            budget_evaluations=run_budget.evaluations,
            clock=run_budget.clock,
            repetitions=repetitions,
            seed_root=seed_root,
            out=str(out / f"campaign-{kind}"),
            workers=workers,
            kind="compare",
        )
        cdir = run_campaign(manifest, log=log)
        samples[kind] = read_final_hypervolumes(eval_campaign(cdir))
    rep = compare_samples(samples["fitness"], samples["hypervolume"], spec.name)
    (out / "comparison.json").write_text(json.dumps(rep.to_dict(), indent=1) + "\n")
    rows = [(k, i, v) for k in ("fitness", "hypervolume") for i, v in enumerate(samples[k])]
    (out / "comparison.csv").write_text(_csv(rows, ["approach", "rep", "ih_overall"]))
    return rep


def gen_instance(spec: ZenoSpec, out, pddl: bool = False, time_limit: float | None = 30.0) -> dict:
    from .multizeno import export_pddl

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    name = spec.name
    files = {}
    p = out / f"{name}.instance.json"
    p.write_text(json.dumps(instance_to_dict(spec), indent=1) + "\n")
    files["instance"] = p
    front = exact_front(spec, time_limit=time_limit)
    p = out / f"{name}_front.csv"
    write_front_csv(p, front)
    files["front"] = p
    if pddl:
        dom, prob = export_pddl(spec)
        (out / "domain.pddl").write_text(dom)
        (out / f"{name}.pddl").write_text(prob)
        files["domain"] = out / "domain.pddl"
        files["problem"] = out / f"{name}.pddl"
    files["provenance"] = front_provenance(spec)
    return files


def load_reference_front(path) -> list[ObjectivePoint]:
    if not Path(path).exists():
        raise HarnessError(f"front file {path} not found")
    return read_front_csv(path)
