from fractions import Fraction

import pytest

from aggplan.objectives import ObjectivePoint, ParetoFront, format_number, read_front_csv, write_front_csv


def test_dominance_is_weak_pareto():
    p = ObjectivePoint(8, 12)
    assert p.dominates((9, 12))
    assert p.dominates((8, 13))
    assert not p.dominates((8, 12))
    assert not p.dominates((7, 13))


def test_front_sorts_and_dedupes():
    f = ParetoFront(((12, 10), (8, 12), (8, 12)))
    assert f.as_tuples() == [(8.0, 12.0), (12.0, 10.0)]
    assert (12, 10) in f and len(f) == 2


def test_front_rejects_dominated_points():
    with pytest.raises(ValueError):
        ParetoFront(((8, 12), (9, 12)))


def test_scaled_cost():
    f = ParetoFront(((8, 12), (24, 4))).scaled_cost(Fraction(1, 2))
    assert list(f) == [(8, 6), (24, 2)]


def test_csv_round_trip(tmp_path):
    pts = [(Fraction(8), Fraction(12)), (Fraction(12), Fraction(41, 5))]
    p = tmp_path / "f.csv"
    write_front_csv(p, pts, comment="hand made")
    lines = p.read_text().splitlines()
    assert lines[0] == "makespan,cost"
    assert lines[2] == "8,12" and lines[3] == "12,8.2"
    assert read_front_csv(p) == pts


def test_csv_header_checked(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("cost,makespan\n1,2\n")
    with pytest.raises(ValueError):
        read_front_csv(p)


def test_format_number():
    assert format_number(Fraction(10)) == "10"
    assert format_number(Fraction(11, 10)) == "1.1"
    assert format_number(4.0) == "4"
