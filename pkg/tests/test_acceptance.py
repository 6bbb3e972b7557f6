"""Exit criteria of the build, one test per criterion at its stated tolerance.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
prints one PASS/FAIL line per criterion.
"""
import csv
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from aggplan.aggregation import AlphaSchedule, run_aggregated
from aggplan.cli import main
from aggplan.dae import Budget, DaEConfig, GenomeSpace, run_dae
from aggplan.harness import reproduce_comparison, tune_campaign
from aggplan.metrics import hypervolume_2d, nondominated, unary_hypervolume
from aggplan.multizeno import ZenoSpec, build_task, exact_front, shuttle_plan
from aggplan.paramils import DaEObjective, Parameter, ParamSpace, QualityMeasure, Target, table1_space, tune
from aggplan.planning import validate_plan

from conftest import ZENO3_FRONT
from oracles import RES, grid_hypervolume, quadratic_filter, random_lattice_points

pytestmark = pytest.mark.acceptance

# desk settings for the comparison (effort seconds; see README)
COMPARE_RUN_SECONDS = 6.0
COMPARE_TUNE_SECONDS = 2.0
COMPARE_TUNE_EVALS = 16


@pytest.mark.criterion(1, "front oracle: Zeno3/6/9 reference fronts, exact, < 1 s")
def test_c1_front_oracle(criterion, tmp_path):
    t0 = time.perf_counter()
    assert main(["gen", "--instance", "zeno3", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "zeno3_front.csv") as fh:
        rows = [(Fraction(r["makespan"]), Fraction(r["cost"])) for r in csv.DictReader(fh)]
    assert rows == ZENO3_FRONT
    z6 = exact_front(ZenoSpec(6))
    assert len(z6) == 11
    assert {(20, 30), (24, 28), (28, 26), (56, 12), (60, 10)} <= set(z6)
    assert len(exact_front(ZenoSpec(9))) == 17
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2, "planning sanity: shuttle plans (8,12) via city1 and (24,4) via city3")
def test_c2_shuttle_plans(criterion, zeno3):
    v1 = validate_plan(zeno3, shuttle_plan(zeno3, via=1))
    v3 = validate_plan(zeno3, shuttle_plan(zeno3, via=3))
    assert v1.valid and (v1.makespan, v1.cost) == (8, 12)
    assert v3.valid and (v3.makespan, v3.cost) == (24, 4)


@pytest.mark.criterion(3, "metrics oracle equivalence on 1000 random point sets, < 60 s")
def test_c3_metrics_oracles(criterion):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    cell = Fraction(1, RES * RES)
    for _ in range(1000):
        pts = random_lattice_points(rng, n_max=50)
        assert abs(hypervolume_2d(pts, (1, 1)) - grid_hypervolume(pts, (1, 1))) <= cell
        assert [tuple(p) for p in nondominated(pts)] == quadratic_filter(pts)
        front = list(nondominated(pts))
        if front:
            assert unary_hypervolume(front, front) == 0
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(4, "EA feasibility on Zeno3, default config, 60 s: >= 9/11 reach makespan 8 (a=1) and cost 4 (a=0)")
def test_c4_ea_feasibility(criterion, zeno3, zeno3_space, record_property):
    # the best individual never gets worse, so stopping once the optimum is
    # reached gives the same verdict as running out the budget
    cfg = DaEConfig()
    for alpha, target, attr in ((1, 8, "makespan"), (0, 4, "cost")):
        hits = 0
        for seed in range(11):
            res = run_dae(zeno3, cfg, alpha, Budget(seconds=60), seed=seed, space=zeno3_space, target_fitness=target)
            b = res.best
            hits += b.feasible and getattr(b, attr) == target
        record_property(f"hits_alpha_{alpha}", hits)
        assert hits >= 9, f"alpha={alpha}: {hits}/11"


@pytest.mark.criterion(5, "tuner finds the synthetic optimum within 300 evaluations in >= 10/11 seeds, < 5 min")
def test_c5_tuner(criterion):
    t0 = time.perf_counter()
    rng = random.Random(77)
    pen = [[rng.randint(1, 9) for _ in range(6)] for _ in range(6)]
    opt = tuple(rng.randrange(6) for _ in range(6))
    for i, v in enumerate(opt):
        pen[i][v] = 0
    space = ParamSpace([Parameter(f"p{i}", tuple(range(6))) for i in range(6)])
    f = lambda c: sum(pen[i][c[f"p{i}"]] for i in range(6))  # noqa: E731
    # brute force over all 6^6 configurations: the optimum is unique
    import itertools

    best = [v for v in itertools.product(range(6), repeat=6) if sum(pen[i][v[i]] for i in range(6)) == 0]
    assert best == [opt]
    found = 0
    for seed in range(11):
        res = tune(space, f, 300, seed=seed)
        traj = res.incumbent_trajectory
        assert all(a >= b for a, b in zip(traj, traj[1:]))
        found += space.key(res.incumbent) == opt
    assert found >= 10
    assert time.perf_counter() - t0 < 300


@pytest.mark.criterion(6, "strategy wiring: W-cost=0 gives 100% makespan sub-solves, W-makespan=0 gives 100% cost")
def test_c6_strategy_wiring(criterion, zeno3):
    # manual configurations
    for wm, wc, only in ((3, 0, "makespan"), (0, 2, "cost")):
        res = run_dae(zeno3, DaEConfig(w_makespan=wm, w_cost=wc), Fraction(1, 2), Budget(evaluations=150), seed=1)
        assert set(res.strategy_counts) == {only} and res.strategy_counts[only] > 0
    # tuned configurations, from a space whose weight domain pins W-cost (W-makespan) to 0
    for pinned, only in (("w_cost", "makespan"), ("w_makespan", "cost")):
        base = table1_space()
        params = [Parameter(p.name, (0,) if p.name == pinned else p.values) for p in base.params]
        default = dict(base.default, **{pinned: 0})
        space = ParamSpace(params, base.forbidden, default)
        target = Target(zeno3, Fraction(1, 2), Budget(evaluations=30))
        res = tune(space, DaEObjective(target, QualityMeasure("fitness")), 3, seed=2)
        cfg = res.config()
        assert getattr(cfg, pinned) == 0
        agg = run_aggregated(zeno3, cfg, [0, 0.5, 1], Budget(evaluations=60), seeds=[1, 2, 3])
        for run in agg.runs:
            assert set(run.strategy_counts) == {only}


@pytest.mark.criterion(7, "Zeno3 desk comparison: 2x11 overall I_H^- samples + Wilcoxon report; direction recorded")
def test_c7_comparison(criterion, tmp_path_factory, record_property):
    out = tmp_path_factory.mktemp("comparison")
    rep = reproduce_comparison(
        ZenoSpec(3),
        out,
        run_budget=Budget(seconds=COMPARE_RUN_SECONDS),
        tune_budget=Budget(seconds=COMPARE_TUNE_SECONDS),
        evals_budget=COMPARE_TUNE_EVALS,
        repetitions=11,
        seed_root=0,
    )
    assert len(rep.samples["fitness"]) == 11 and len(rep.samples["hypervolume"]) == 11
    assert 0 <= rep.p_value <= 1
    assert (out / "comparison.json").exists() and (out / "comparison.csv").exists()
    verdict = "holds" if rep.direction_ok else "does NOT hold"
    record_property(
        "finding",
        f"median I_H^- hyper={rep.medians['hypervolume']:.4g} fitness={rep.medians['fitness']:.4g}, "
        f"p={rep.p_value:.3g}; expected direction (hyper <= fitness) {verdict}",
    )


@pytest.mark.criterion(8, "determinism: identical manifest and seed root give byte-identical traces and reports")
def test_c8_determinism(criterion, tmp_path):
    import json
    import shutil

    out = tmp_path / "campaign"
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        "instance": {"name": "zeno3"},
        "alpha_schedule": ["0", "0.5", "1"],
        "configs": {"default": {}},
        "budget_seconds": 1.0,
        "repetitions": 2,
        "seed_root": 42,
        "out": str(out),
    }))

    def run_all():
        assert main(["aggregate", "--manifest", str(manifest)]) == 0
        assert main(["eval", str(out)]) == 0
        assert main(["report", str(out)]) == 0
        files = {}
        for p in sorted(out.rglob("*")):
            if p.is_file():
                text = p.read_text()
                if p.name == "campaign.log":
                    text = text.split("\n", 1)[1]  # timestamp line
                files[str(p.relative_to(out))] = text
        shutil.rmtree(out)
        return files

    first, second = run_all(), run_all()
    assert any(k.startswith("traces/") for k in first)
    assert first == second
