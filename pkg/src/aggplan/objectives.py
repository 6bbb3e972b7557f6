"""Objective points, Pareto fronts and the ``makespan,cost`` CSV format."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple

FRONT_HEADER = "makespan,cost"


class ObjectivePoint(NamedTuple):
    makespan: Fraction
    cost: Fraction

    def dominates(self, other) -> bool:
        """Weak Pareto dominance (minimisation): no worse everywhere, better somewhere."""
        return (
            self.makespan <= other[0]
            and self.cost <= other[1]
            and (self.makespan < other[0] or self.cost < other[1])
        )


def as_point(p) -> ObjectivePoint:
    if isinstance(p, ObjectivePoint):
        return p
    m, c = p
    return ObjectivePoint(m, c)


@dataclass(frozen=True)
class ParetoFront:
    """Mutually nondominated points sorted by increasing makespan."""

    points: tuple[ObjectivePoint, ...] = ()

    def __post_init__(self):
        pts = tuple(sorted({as_point(p) for p in self.points}))
        for a, b in zip(pts, pts[1:]):
            if not (a.makespan < b.makespan and a.cost > b.cost):
                raise ValueError(f"points {tuple(a)} and {tuple(b)} are not mutually nondominated")
        object.__setattr__(self, "points", pts)

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return as_point(p) in self.points

    def as_tuples(self) -> list[tuple[float, float]]:
        return [(float(m), float(c)) for m, c in self.points]

    def scaled_cost(self, factor) -> "ParetoFront":
        return ParetoFront(tuple(ObjectivePoint(m, c * factor) for m, c in self.points))


def _num(text: str):
    text = text.strip()
    try:
        return Fraction(text)
    except ValueError:
        return Fraction(repr(float(text)))


def format_number(x) -> str:
    """Shortest exact-looking text for a time or cost value."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return repr(float(x))
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def write_front_csv(path, points: Iterable, comment: str | None = None) -> None:
    lines = [FRONT_HEADER]
    if comment:
        lines.append(f"# {comment}")
    for m, c in points:
        lines.append(f"{format_number(m)},{format_number(c)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_front_csv(path) -> list[ObjectivePoint]:
    rows = []
    text = Path(path).read_text().splitlines()
    header_seen = False
    for line in text:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line.replace(" ", "") != FRONT_HEADER:
                raise ValueError(f"{path}: expected header {FRONT_HEADER!r}, got {line!r}")
            header_seen = True
            continue
        m, c = line.split(",")
        rows.append(ObjectivePoint(_num(m), _num(c)))
    return rows
