"""Command line entry point: ``aggplan <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aggregation import AggregationError, AlphaSchedule, format_alpha
from .dae import Budget, DaEConfig, run_dae
from .harness import (
    DESK_BUDGETS,
    CampaignManifest,
    HarnessError,
    eval_campaign,
    gen_instance,
    report_campaign,
    reproduce_comparison,
    run_campaign,
    tune_campaign,
)
from .multizeno import FrontUnavailable, ZenoSpec, build_task
from .objectives import write_front_csv


def _spec(args) -> ZenoSpec:
    return ZenoSpec.named(args.instance, tax2=args.tax2)


def _budget(args, default_seconds=None) -> Budget:
    seconds = args.budget_seconds
    evals = getattr(args, "evals", None)
    if seconds is None and evals is None:
        seconds = default_seconds
    return Budget(seconds, evals, args.clock)


def _config(path) -> DaEConfig:
    if path is None:
        return DaEConfig()
    p = Path(path)
    if not p.exists():
        raise HarnessError(f"config file {p} not found")
    data = json.loads(p.read_text())
    return DaEConfig.from_dict(data.get("config", data))


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_gen(args) -> int:
    spec = _spec(args)
    files = gen_instance(spec, args.out, pddl=args.pddl)
    print(Path(files["front"]).read_text(), end="")
    _say(f"wrote {', '.join(str(v) for k, v in files.items() if k != 'provenance')}")
    return 0


def cmd_solve(args) -> int:
    spec = _spec(args)
    task = build_task(spec)
    budget = _budget(args, DESK_BUDGETS.get(spec.passengers, 60.0))
    res = run_dae(task, _config(args.config), args.alpha, budget, seed=args.seed, max_nodes=args.max_nodes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res.trace.write(out / "trace.jsonl")
    write_front_csv(out / "front.csv", res.points)
    b = res.best
    if b.feasible:
        (out / "plan.txt").write_text(str(b.plan) + "\n")
        print(f"best: makespan {float(b.makespan):g} cost {float(b.cost):g} F={float(b.fitness):g}")
    else:
        print(f"no feasible individual after {res.evaluations} evaluations")
    print(f"evaluations {res.evaluations}, strategies {dict(sorted(res.strategy_counts.items()))}")
    return 0


def _manifest(args) -> CampaignManifest:
    if args.manifest:
        m = CampaignManifest.load(args.manifest)
        if args.out:
            m.out = args.out
        if args.workers is not None:
            m.workers = args.workers
        return m
    spec = _spec(args)
    schedule = AlphaSchedule.parse(args.alpha_schedule) if args.alpha_schedule else AlphaSchedule()
    cfg = _config(args.config).to_dict(labels=True)
    secs = args.budget_seconds
    if secs is None and args.evals is None:
        secs = DESK_BUDGETS.get(spec.passengers, 60.0)
    return CampaignManifest(
        instance=spec,
        schedule=schedule,
        configs={"default": cfg},
        config_source="tuned" if args.tuned_dir else "explicit",
        tuned_dir=args.tuned_dir,
        budget_seconds=secs,
        budget_evaluations=args.evals,
        clock=args.clock,
        repetitions=args.repetitions,
        seed_root=args.seed,
        out=args.out or "campaign",
        workers=args.workers or 1,
        max_nodes=args.max_nodes,
    )


def cmd_aggregate(args) -> int:
    m = _manifest(args)
    out = run_campaign(m, log=_say)
    print(out)
    return 0


def cmd_tune(args) -> int:
    spec = _spec(args)
    schedule = AlphaSchedule.parse(args.alpha_schedule) if args.alpha_schedule else AlphaSchedule()
    budget = _budget(args, 2.0)
    cfgs = tune_campaign(
        spec, schedule, args.measure, args.evals_budget, budget, args.seed, args.out,
        n_runs=args.n_runs, max_nodes=args.max_nodes, workers=args.workers or 1, log=_say,
    )
    for label, cfg in cfgs.items():
        print(f"alpha {label}: {json.dumps(cfg.to_dict(labels=True))}")
    return 0


def cmd_eval(args) -> int:
    print(eval_campaign(args.campaign, args.out))
    return 0


def cmd_report(args) -> int:
    print(report_campaign(args.campaign, args.out))
    return 0


def cmd_compare(args) -> int:
    spec = _spec(args)
    schedule = AlphaSchedule.parse(args.alpha_schedule) if args.alpha_schedule else AlphaSchedule()
    rep = reproduce_comparison(
        spec,
        args.out,
        run_budget=Budget(args.budget_seconds or 6.0, None, args.clock),
        tune_budget=Budget(args.tune_seconds, None, args.clock),
        evals_budget=args.evals_budget,
        repetitions=args.repetitions,
        seed_root=args.seed,
        schedule=schedule,
        workers=args.workers or 1,
        log=_say,
    )
    print(json.dumps(rep.to_dict(), indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aggplan", description="Weighted-sum Pareto approximation for MultiZeno with Divide-and-Evolve")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--instance", default="zeno3", help="zeno3, zeno6, zeno9, ...")
        sp.add_argument("--tax2", default=None, help="landing tax of city2 (default 2)")
        sp.add_argument("--seed", type=int, default=0, help="seed root")
        sp.add_argument("--out", default=out_default)

    def budget(sp):
        sp.add_argument("--budget-seconds", type=float, default=None, help="effort seconds per run")
        sp.add_argument("--evals", type=int, default=None, help="evaluation budget per run")
        sp.add_argument("--clock", choices=("effort", "cpu"), default="effort")
        sp.add_argument("--max-nodes", type=int, default=100, help="node cap per sub-problem")

    sp = sub.add_parser("gen", help="write instance, exact front and optional PDDL")
    common(sp, ".")
    sp.add_argument("--pddl", action="store_true")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("solve", help="one alpha-run")
    common(sp, "run")
    budget(sp)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--config", default=None, help="JSON file with DaE parameters")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("aggregate", help="run an aggregated campaign")
    common(sp)
    budget(sp)
    sp.add_argument("--manifest", default=None)
    sp.add_argument("--alpha-schedule", default=None, help="comma-separated alphas")
    sp.add_argument("--repetitions", type=int, default=11)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--config", default=None)
    sp.add_argument("--tuned-dir", default=None, help="directory of per-alpha tuned configs")
    sp.set_defaults(func=cmd_aggregate)

    sp = sub.add_parser("tune", help="ParamILS per alpha")
    common(sp, "tuned")
    budget(sp)
    sp.add_argument("--alpha-schedule", default=None)
    sp.add_argument("--measure", choices=("fitness", "hypervolume"), default="fitness")
    sp.add_argument("--evals-budget", type=int, default=12, help="config evaluations per alpha")
    sp.add_argument("--n-runs", type=int, default=1)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_tune)

    for name, func, helptext in (
        ("eval", cmd_eval, "metrics from campaign traces"),
        ("report", cmd_report, "plot-ready CSVs from campaign traces"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("campaign")
        sp.add_argument("--out", default=None)
        sp.set_defaults(func=func)

    sp = sub.add_parser("compare", help="fitness- vs hypervolume-tuned aggregation")
    common(sp, "comparison")
    sp.add_argument("--budget-seconds", type=float, default=None, help="effort seconds per campaign run")
    sp.add_argument("--tune-seconds", type=float, default=2.0, help="effort seconds per tuning run")
    sp.add_argument("--clock", choices=("effort", "cpu"), default="effort")
    sp.add_argument("--alpha-schedule", default=None)
    sp.add_argument("--evals-budget", type=int, default=12)
    sp.add_argument("--repetitions", type=int, default=11)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (HarnessError, AggregationError, FrontUnavailable, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"aggplan {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
