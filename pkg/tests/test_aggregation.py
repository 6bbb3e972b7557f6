import random
from fractions import Fraction

import pytest

from aggplan.aggregation import (
    PARTIAL_RESULTS,
    AggregationError,
    AlphaSchedule,
    format_alpha,
    merge_fronts,
    run_aggregated,
)
from aggplan.dae import Budget, DaEConfig
from aggplan.metrics import unary_hypervolume

from conftest import ZENO3_FRONT
from oracles import quadratic_filter


def test_default_schedule():
    s = AlphaSchedule()
    assert s.labels() == ["0.0", "0.05", "0.1", "0.3", "0.5", "0.55", "0.7", "1.0"]
    assert s.alphas[5] == Fraction(11, 20)


def test_schedule_validation():
    for bad in ((), (0.5, 0.3), (0, 1.5), (0.1, 0.1)):
        with pytest.raises(ValueError):
            AlphaSchedule(bad)
    assert AlphaSchedule.parse("0, 0.5,1").alphas == (0, Fraction(1, 2), 1)
    assert format_alpha("0.55") == "0.55"


def test_merge_matches_quadratic_filter():
    rng = random.Random(0)
    sets = [[(rng.randint(0, 300), rng.randint(0, 300)) for _ in range(1250)] for _ in range(8)]
    union = [p for s in sets for p in s]
    assert [tuple(p) for p in merge_fronts(sets)] == quadratic_filter(union)


def test_merge_idempotent_union():
    a = [(8, 12), (12, 14), (24, 4)]
    assert merge_fronts([a, a]) == merge_fronts([a])


def test_single_alpha_campaign(zeno3):
    res = run_aggregated(zeno3, DaEConfig(), [1], Budget(evaluations=120), seeds=[3])
    run = res.runs[0]
    assert list(res.front) == [p for p in res.front if p in set(run.points)]
    assert set(res.front) <= set(run.points)
    assert res.cpu_seconds == run.seconds


def test_merged_front_not_dominated(zeno3):
    res = run_aggregated(zeno3, DaEConfig(), [0, 0.5, 1], Budget(evaluations=120), seeds=[1, 2, 3])
    for run in res.runs:
        for p in run.points:
            assert not any(q != p and p[0] <= q[0] and p[1] <= q[1] for q in res.front)


def test_adding_alpha_never_worsens(zeno3):
    cfg = DaEConfig()
    base = run_aggregated(zeno3, cfg, [1], Budget(evaluations=90), seeds=[7])
    more = run_aggregated(zeno3, cfg, [0, 1], Budget(evaluations=90), seeds=[8, 7])
    assert unary_hypervolume(more.front, ZENO3_FRONT) <= unary_hypervolume(base.front, ZENO3_FRONT)


def test_parallel_equals_serial(zeno3):
    kw = dict(schedule=[0, 1], budget=Budget(evaluations=60), seeds=[4, 5])
    a = run_aggregated(zeno3, DaEConfig(), **kw)
    b = run_aggregated(zeno3, DaEConfig(), workers=2, **kw)
    assert a.front == b.front
    assert [r.trace.to_jsonl() for r in a.runs] == [r.trace.to_jsonl() for r in b.runs]


def test_per_alpha_configs(zeno3):
    cfgs = {"0.0": DaEConfig(w_makespan=0), "1.0": DaEConfig(w_cost=0)}
    res = run_aggregated(zeno3, cfgs, [0, 1], Budget(evaluations=60), seeds=[1, 2])
    assert set(res.runs[0].strategy_counts) == {"cost"}
    assert set(res.runs[1].strategy_counts) == {"makespan"}


def test_crash_writes_partial_results(zeno3, tmp_path, monkeypatch):
    import aggplan.aggregation as agg

    real = agg.run_dae
    calls = []

    def flaky(*a, **k):
        calls.append(1)
        if len(calls) == 2:
            raise RuntimeError("boom")
        return real(*a, **k)

    monkeypatch.setattr(agg, "run_dae", flaky)
    with pytest.raises(AggregationError) as e:
        run_aggregated(zeno3, DaEConfig(), [0, 0.5, 1], Budget(evaluations=30), out_dir=tmp_path)
    assert e.value.partial_path == tmp_path / PARTIAL_RESULTS
    import json

    data = json.loads((tmp_path / PARTIAL_RESULTS).read_text())
    assert [c["alpha"] for c in data["completed"]] == ["0.0"]
    assert data["missing"] == ["0.5", "1.0"]


def test_normalize_needs_scales(zeno3):
    with pytest.raises(ValueError):
        run_aggregated(zeno3, DaEConfig(), [1], Budget(evaluations=1), normalize=True)
    res = run_aggregated(zeno3, DaEConfig(), [0.5], Budget(evaluations=30), normalize=True, scales=(24, 12))
    b = res.runs[0].best
    assert b.fitness == Fraction(1, 2) * b.makespan / 24 + Fraction(1, 2) * b.cost / 12
