import random
from fractions import Fraction

import pytest
import scipy.stats

from aggplan.dae import RunTrace, Snapshot
from aggplan.metrics import (
    default_reference_point,
    exact_pvalue_bruteforce,
    hitting_ratio,
    hitting_table,
    hypervolume_2d,
    hypervolume_series,
    nondominated,
    unary_hypervolume,
    wilcoxon_signed_rank,
)

from conftest import ZENO3_FRONT
from oracles import grid_hypervolume, quadratic_filter, random_lattice_points

REF = (26, 14)


def test_nondominated_examples():
    assert list(nondominated([(8, 12), (8, 12)])) == [(8, 12)]
    assert list(nondominated([(8, 12), (9, 12)])) == [(8, 12)]
    assert list(nondominated(ZENO3_FRONT + [(13, 11)])) == ZENO3_FRONT
    assert list(nondominated([])) == []


def test_nondominated_matches_quadratic_filter():
    rng = random.Random(0)
    for _ in range(300):
        pts = [(rng.randint(0, 20), rng.randint(0, 20)) for _ in range(rng.randint(0, 60))]
        assert [tuple(p) for p in nondominated(pts)] == quadratic_filter(pts)
        nd = nondominated(pts)
        assert nondominated(nd) == nd


def test_hypervolume_examples():
    assert hypervolume_2d([(8, 12)], REF) == 36
    assert hypervolume_2d([], REF) == 0
    assert hypervolume_2d(ZENO3_FRONT, REF) == 100
    with pytest.raises(ValueError):
        hypervolume_2d([(30, 1)], REF)


def test_hypervolume_matches_grid_integration():
    rng = random.Random(1)
    for _ in range(150):
        pts = random_lattice_points(rng)
        assert abs(hypervolume_2d(pts, (1, 1)) - grid_hypervolume(pts, (1, 1))) <= Fraction(1, 100**2)


def test_unary_hypervolume_examples():
    assert unary_hypervolume(ZENO3_FRONT, ZENO3_FRONT, REF) == 0
    assert unary_hypervolume([], ZENO3_FRONT, REF) == 100
    missing = [p for p in ZENO3_FRONT if p != (12, 10)]
    # exclusive rectangle of (12,10) between (8,12) and (16,8)
    assert unary_hypervolume(missing, ZENO3_FRONT, REF) == (16 - 12) * (12 - 10)


def test_unary_hypervolume_clips_outside_points():
    assert unary_hypervolume([(30, 1), (1, 30)], ZENO3_FRONT, REF) == 100


def test_unary_hypervolume_monotone_and_zero_iff_cover():
    rng = random.Random(2)
    ref = default_reference_point(ZENO3_FRONT)
    for _ in range(200):
        a = [(rng.randint(8, 26), rng.randint(4, 14)) for _ in range(rng.randint(0, 8))]
        extra = (rng.randint(8, 26), rng.randint(4, 14))
        before = unary_hypervolume(a, ZENO3_FRONT, ref)
        after = unary_hypervolume(a + [extra], ZENO3_FRONT, ref)
        assert after <= before
        covers = all(any(q[0] <= p[0] and q[1] <= p[1] for q in a) for p in ZENO3_FRONT)
        assert (before == 0) == covers


def test_default_reference_point():
    ref = default_reference_point(ZENO3_FRONT)
    assert ref == (Fraction(252, 10), Fraction(126, 10))


def snapshot(t, pts):
    return Snapshot(t, 0, 0.0, tuple((float(m), float(c)) for m, c in pts))


def test_hitting_table():
    tr = RunTrace([snapshot(0.0, [(12, 12)]), snapshot(3.5, [(8, 12)]), snapshot(5.0, [(8, 12), (24, 4)])])
    table = hitting_table([tr], ZENO3_FRONT)
    assert table[(8, 12)] == [(0, 3.5)]
    assert table[(24, 4)] == [(0, 5.0)]
    assert table[(12, 10)] == [(0, None)]
    assert hitting_ratio(table, 4.0)[(8, 12)] == 1.0
    empty = hitting_table([], ZENO3_FRONT)
    assert all(v == [] for v in empty.values())


def test_hitting_full_front_run():
    tr = RunTrace([snapshot(1.0, ZENO3_FRONT)])
    table = hitting_table([("r", tr)], ZENO3_FRONT)
    assert all(v == [("r", 1.0)] for v in table.values())


def test_hitting_exact_decimals():
    ref = [(12, Fraction("8.2"))]
    table = hitting_table([RunTrace([snapshot(1.0, [(12, 8.2)])])], ref)
    assert table[ref[0]] == [(0, 1.0)]


def test_hypervolume_series(tmp_path):
    tr = RunTrace([snapshot(0.0, [(8, 12)]), snapshot(1.0, [(24, 4)])])
    rows = hypervolume_series(tr, ZENO3_FRONT, REF)
    assert rows[0]["ih_population"] == 100 - 36
    assert rows[1]["ih_archive"] < rows[1]["ih_population"]


def test_wilcoxon_identical_samples():
    r = wilcoxon_signed_rank([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
    assert r.p_value == 1.0 and not r.reject


def test_wilcoxon_all_positive_exact():
    r = wilcoxon_signed_rank([1, 2, 3, 4, 5, 6], [0] * 6, alternative="greater")
    assert r.p_value == 1 / 64 and r.method == "exact"
    assert exact_pvalue_bruteforce([1, 2, 3, 4, 5, 6]) == Fraction(1, 64)


def test_wilcoxon_exact_matches_enumeration_and_scipy():
    rng = random.Random(3)
    for _ in range(40):
        n = rng.randint(5, 12)
        x = [rng.randint(0, 6) for _ in range(n)]
        y = [rng.randint(0, 6) for _ in range(n)]
        if all(a == b for a, b in zip(x, y)):
            continue
        d = [a - b for a, b in zip(x, y)]
        for alt in ("two-sided", "greater", "less"):
            r = wilcoxon_signed_rank(x, y, alternative=alt)
            assert r.p_value == pytest.approx(float(exact_pvalue_bruteforce(d, alt)))
    for _ in range(20):
        x = [rng.random() for _ in range(15)]
        y = [rng.random() for _ in range(15)]
        ours = wilcoxon_signed_rank(x, y).p_value
        assert ours == pytest.approx(scipy.stats.wilcoxon(x, y).pvalue, rel=1e-9)


def test_wilcoxon_exact_and_normal_agree_on_clear_shift():
    rng = random.Random(4)
    for _ in range(20):
        x = [rng.gauss(0, 1) for _ in range(11)]
        y = [v + 3 + rng.gauss(0, 0.3) for v in x]
        e = wilcoxon_signed_rank(x, y, method="exact")
        n = wilcoxon_signed_rank(x, y, method="normal")
        assert e.reject and n.reject


def test_wilcoxon_normal_above_twenty():
    rng = random.Random(5)
    x = [rng.random() for _ in range(30)]
    y = [rng.random() for _ in range(30)]
    r = wilcoxon_signed_rank(x, y)
    assert r.method == "normal"
    assert r.p_value == pytest.approx(scipy.stats.wilcoxon(x, y, method="approx").pvalue, rel=1e-6)


def test_wilcoxon_input_checks():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1] * 5, [1] * 6)
