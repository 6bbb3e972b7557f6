"""Two-objective (makespan, cost) planning on MultiZeno: evolutionary solver, weighted-sum fronts, metrics and tuning."""

__version__ = "0.1.0"
