"""Input checks shared by the estimators and the CLI."""
from __future__ import annotations

from fractions import Fraction
from numbers import Real

from .multizeno import ZenoSpec, build_task
from .planning import PlanningTask


def check_task(task) -> PlanningTask:
    """Accept a PlanningTask, a ZenoSpec or an instance name like ``"zeno6"``."""
    if isinstance(task, PlanningTask):
        return task
    if isinstance(task, ZenoSpec):
        return build_task(task)
    if isinstance(task, str):
        return build_task(ZenoSpec.named(task))
    raise TypeError(f"expected a PlanningTask, ZenoSpec or instance name, got {type(task).__name__}")


def check_alpha(alpha) -> Fraction:
    if isinstance(alpha, bool) or not isinstance(alpha, (Real, str, Fraction)):
        raise TypeError(f"alpha must be a number, got {alpha!r}")
    a = Fraction(repr(alpha)) if isinstance(alpha, float) else Fraction(alpha)
    if not 0 <= a <= 1:
        raise ValueError(f"alpha={alpha} outside [0, 1]")
    return a


def check_positive(value, name: str, allow_none: bool = True):
    if value is None:
        if allow_none:
            return None
        raise ValueError(f"{name} is required")
    if isinstance(value, bool) or not isinstance(value, Real) or value <= 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return value


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise TypeError(f"seed must be an int, got {seed!r}")
    return seed
