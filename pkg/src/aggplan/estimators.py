"""scikit-learn style wrappers. ``fit`` takes a task (or instance name); the
fitted state is exposed through trailing-underscore attributes."""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .aggregation import AlphaSchedule, run_aggregated
from .dae import TABLE1, Budget, DaEConfig, run_dae
from .harness import run_seed
from .paramils import DaEObjective, QualityMeasure, Target, table1_space, tune
from .validation import check_alpha, check_positive, check_seed, check_task

_DEFAULTS = DaEConfig()


class _DaEParams(BaseEstimator):
    """Table 1 parameters as estimator parameters."""

    def _config(self) -> DaEConfig:
        return DaEConfig(**{k: getattr(self, k) for k in TABLE1})

    def _budget(self) -> Budget:
        check_positive(self.budget_seconds, "budget_seconds")
        check_positive(self.budget_evaluations, "budget_evaluations")
        return Budget(self.budget_seconds, self.budget_evaluations, self.clock)


class DaEPlanner(_DaEParams):
    """One alpha-run. After ``fit``: ``best_``, ``plan_``, ``front_``, ``trace_``."""

    def __init__(
        self,
        alpha=1.0,
        budget_seconds=10.0,
        budget_evaluations=None,
        clock="effort",
        seed=0,
        max_nodes=100,
        w_makespan=_DEFAULTS.w_makespan,
        w_cost=_DEFAULTS.w_cost,
        pop_size=_DEFAULTS.pop_size,
        proba_cross=_DEFAULTS.proba_cross,
        proba_mut=_DEFAULTS.proba_mut,
        w_add_atom=_DEFAULTS.w_add_atom,
        w_add_goal=_DEFAULTS.w_add_goal,
        w_del_atom=_DEFAULTS.w_del_atom,
        w_del_goal=_DEFAULTS.w_del_goal,
        proba_change=_DEFAULTS.proba_change,
        proba_delatom=_DEFAULTS.proba_delatom,
        radius=_DEFAULTS.radius,
    ):
        self.alpha = alpha
        self.budget_seconds = budget_seconds
        self.budget_evaluations = budget_evaluations
        self.clock = clock
        self.seed = seed
        self.max_nodes = max_nodes
        self.w_makespan = w_makespan
        self.w_cost = w_cost
        self.pop_size = pop_size
        self.proba_cross = proba_cross
        self.proba_mut = proba_mut
        self.w_add_atom = w_add_atom
        self.w_add_goal = w_add_goal
        self.w_del_atom = w_del_atom
        self.w_del_goal = w_del_goal
        self.proba_change = proba_change
        self.proba_delatom = proba_delatom
        self.radius = radius

    def fit(self, task, y=None):
        task = check_task(task)
        res = run_dae(
            task,
            self._config(),
            check_alpha(self.alpha),
            self._budget(),
            seed=check_seed(self.seed),
            max_nodes=self.max_nodes,
        )
        self.result_ = res
        self.best_ = res.best
        self.plan_ = res.best.plan
        self.front_ = res.points
        self.trace_ = res.trace
        return self

    def score(self, task=None, y=None) -> float:
        """Negated best F_alpha, so larger is better."""
        check_is_fitted(self, "best_")
        return -float(self.best_.fitness)


class AggregatedPlanner(_DaEParams):
    """All alpha-runs with one shared configuration; ``front_`` is the merged front."""

    def __init__(
        self,
        alphas=None,
        budget_seconds=10.0,
        budget_evaluations=None,
        clock="effort",
        seed=0,
        max_nodes=100,
        workers=1,
        w_makespan=_DEFAULTS.w_makespan,
        w_cost=_DEFAULTS.w_cost,
        pop_size=_DEFAULTS.pop_size,
        proba_cross=_DEFAULTS.proba_cross,
        proba_mut=_DEFAULTS.proba_mut,
        w_add_atom=_DEFAULTS.w_add_atom,
        w_add_goal=_DEFAULTS.w_add_goal,
        w_del_atom=_DEFAULTS.w_del_atom,
        w_del_goal=_DEFAULTS.w_del_goal,
        proba_change=_DEFAULTS.proba_change,
        proba_delatom=_DEFAULTS.proba_delatom,
        radius=_DEFAULTS.radius,
    ):
        self.alphas = alphas
        self.budget_seconds = budget_seconds
        self.budget_evaluations = budget_evaluations
        self.clock = clock
        self.seed = seed
        self.max_nodes = max_nodes
        self.workers = workers
        self.w_makespan = w_makespan
        self.w_cost = w_cost
        self.pop_size = pop_size
        self.proba_cross = proba_cross
        self.proba_mut = proba_mut
        self.w_add_atom = w_add_atom
        self.w_add_goal = w_add_goal
        self.w_del_atom = w_del_atom
        self.w_del_goal = w_del_goal
        self.proba_change = proba_change
        self.proba_delatom = proba_delatom
        self.radius = radius

    def fit(self, task, y=None):
        task = check_task(task)
        schedule = AlphaSchedule() if self.alphas is None else AlphaSchedule(tuple(self.alphas))
        seed = check_seed(self.seed)
        seeds = [run_seed(seed, "aggregate", i, 0) for i in range(len(schedule))]
        res = run_aggregated(
            task, self._config(), schedule, self._budget(), seeds, workers=self.workers, max_nodes=self.max_nodes
        )
        self.result_ = res
        self.front_ = res.front
        self.traces_ = res.traces
        return self


class ParamILSTuner(BaseEstimator):
    """Tune the Table 1 parameters for one alpha. After ``fit``: ``best_config_``,
    ``best_quality_``, ``log_``."""

    def __init__(self, alpha=1.0, measure="fitness", evals_budget=12, budget_seconds=2.0, n_runs=1, seed=0, reference_front=None):
        self.alpha = alpha
        self.measure = measure
        self.evals_budget = evals_budget
        self.budget_seconds = budget_seconds
        self.n_runs = n_runs
        self.seed = seed
        self.reference_front = reference_front

    def fit(self, task, y=None):
        from .multizeno import ZenoSpec, exact_front

        ref = self.reference_front
        if self.measure == "hypervolume" and ref is None:
            if not isinstance(task, (str, ZenoSpec)):
                raise ValueError("hypervolume tuning of a bare task needs reference_front")
            spec = ZenoSpec.named(task) if isinstance(task, str) else task
            ref = tuple(exact_front(spec))
        measure = QualityMeasure(self.measure, tuple(ref or ()))
        check_positive(self.evals_budget, "evals_budget", allow_none=False)
        target = Target(check_task(task), check_alpha(self.alpha), Budget(check_positive(self.budget_seconds, "budget_seconds")))
        objective = DaEObjective(target, measure, self.n_runs, check_seed(self.seed))
        res = tune(table1_space(), objective, int(self.evals_budget), seed=self.seed)
        self.result_ = res
        self.best_config_ = res.config()
        self.best_quality_ = res.quality
        self.log_ = res.log
        return self
