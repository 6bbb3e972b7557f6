"""Independent reference implementations used by several test modules."""
from fractions import Fraction
import random

import numpy as np

RES = 100  # grid cells per unit


def grid_hypervolume(points, ref):
    """Dominated area counted cell by cell on a 1/RES lattice (points on the lattice)."""
    if not points:
        return Fraction(0)
    pts = np.array([[int(round(m * RES)), int(round(c * RES))] for m, c in points])
    rm, rc = int(round(ref[0] * RES)), int(round(ref[1] * RES))
    xs = np.arange(rm)[:, None, None]
    ys = np.arange(rc)[None, :, None]
    dom = ((pts[None, None, :, 0] <= xs) & (pts[None, None, :, 1] <= ys)).any(axis=2)
    return Fraction(int(dom.sum()), RES * RES)


def quadratic_filter(points):
    pts = set(points)
    out = []
    for p in pts:
        if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in pts):
            out.append(p)
    return sorted(out)


def random_lattice_points(rng: random.Random, n_max=50, span=1):
    n = rng.randint(0, n_max)
    return [(Fraction(rng.randrange(span * RES), RES), Fraction(rng.randrange(span * RES), RES)) for _ in range(n)]
