"""Outer search loops: classic ruin-recreate and its scored variant, with
simulated-annealing acceptance, best-snapshot restarts and a wall-clock
budget.

The timing source is injectable (`clock`), defaulting to time.monotonic.
With a deterministic clock, a fixed seed fully determines the trajectory;
under the real clock the iteration count depends on machine speed."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from .core import Instance, Solution, validate
from .construct import savings_init, sweep_init
from .dataio import TrajectoryRecord
from .recreate import (
    ExternalConfig,
    ExternalSolver,
    recreate_insertion,
    recreate_savings,
)
from .scoring import (
    ScoreCache,
    score_all,
    select_disjoint,
    select_greedy,
    select_sample,
)
from .subgraph import (
    RuinedSubGraph,
    construct_add_nn,
    construct_knn,
    construct_pairs,
    construct_sweep,
    insert_many,
    ruin,
)

IMPROVE_EPS = 1e-9

Clock = Callable[[], float]


@dataclass
class SearchConfig:
    init: str = "savings"            # savings | sweep
    construct: str = "pairs"         # pairs | knn | sweep | add_nn
    select: str = "disjoint"         # greedy | sample | disjoint
    n_mult: int = 16
    recreate: str = "insertion"      # insertion | savings | external
    recreate_restarts: int = 24
    external: Optional[ExternalConfig] = None
    accept: str = "sa"               # sa | greedy
    budget_seconds: float = 60.0
    n_target: int = 100
    sweep_restarts: int = 4      # beam restarts per iteration (sweep construct)
    knn_tours: int = 1           # neighbor-bundle size (knn construct)
    pair_neighbors: int = 3      # pair partners per tour (pairs construct)
    softmax_temperature: float = 1.0
    sa_initial_frac: float = 0.0025  # initial temperature as fraction of init cost
    sa_cooling: float = 0.999
    sa_restart_threshold: int = 25
    max_iters: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.init not in ("savings", "sweep"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.construct not in ("pairs", "sweep", "knn", "add_nn"):
            raise ValueError(f"unknown construct {self.construct!r}")
        if self.select not in ("greedy", "sample", "disjoint"):
            raise ValueError(f"unknown select {self.select!r}")
        if self.recreate not in ("insertion", "savings", "external"):
            raise ValueError(f"unknown recreate {self.recreate!r}")
        if self.accept not in ("sa", "greedy"):
            raise ValueError(f"unknown accept {self.accept!r}")
        if self.budget_seconds <= 0:
            raise ValueError("budget must be positive")


@dataclass
class SaState:
    temperature: float
    cooling: float = 0.999
    initial_temperature: float = field(default=0.0)
    iterations_since_improvement: int = 0
    restart_threshold: int = 25
    best_cost: float = math.inf
    restart_pending: bool = False

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.initial_temperature == 0.0:
            self.initial_temperature = self.temperature


def sa_accept(
    state: SaState,
    cost_s: float,
    cost_s2: float,
    rng: np.random.Generator,
) -> Tuple[bool, SaState]:
    """Metropolis acceptance with geometric cooling. The non-improvement
    counter tracks the best cost seen; hitting the restart threshold flags a
    restart from the best snapshot and resets the temperature."""
    delta = cost_s2 - cost_s
    if delta <= 0:
        accepted = True
    else:
        accepted = rng.random() < math.exp(-delta / state.temperature)
    state.temperature *= state.cooling
    if cost_s2 < state.best_cost - IMPROVE_EPS:
        state.best_cost = cost_s2
        state.iterations_since_improvement = 0
    else:
        state.iterations_since_improvement += 1
        if state.iterations_since_improvement >= state.restart_threshold:
            state.restart_pending = True
            state.iterations_since_improvement = 0
            state.temperature = state.initial_temperature
    return accepted, state


def _init_solution(instance: Instance, config: SearchConfig) -> Solution:
    return savings_init(instance) if config.init == "savings" else sweep_init(instance)


def _make_recreate(config: SearchConfig, rng: np.random.Generator):
    if config.recreate == "savings":
        return lambda rsg: recreate_savings(rsg)
    if config.recreate == "insertion":
        return lambda rsg: recreate_insertion(rsg, rng, config.recreate_restarts)
    ext = config.external
    if ext is None:
        raise ValueError("recreate='external' requires an ExternalConfig")
    if ext.timeout is None:
        ext = replace(ext, timeout=config.budget_seconds / 50.0)
    solver = ExternalSolver(ext)
    return solver.recreate


class _Run:
    """Shared bookkeeping for one search run."""

    def __init__(self, instance, config, method, clock, check_feasible):
        self.instance = instance
        self.config = config
        self.check_feasible = check_feasible
        self.clock: Clock = clock if clock is not None else time.monotonic
        self.t0 = self.clock()
        self.rng = np.random.default_rng(config.seed)
        self.current = _init_solution(instance, config)
        self.best = self.current.copy()
        self.traj = TrajectoryRecord(metadata={
            "method": method,
            "seed": config.seed,
            "instance": instance.name,
            "budget": config.budget_seconds,
        })
        self.traj.add(self.elapsed(), self.current.cost)
        self.sa = SaState(
            temperature=max(config.sa_initial_frac * self.current.cost, 1e-9),
            cooling=config.sa_cooling,
            restart_threshold=config.sa_restart_threshold,
            best_cost=self.current.cost,
        )
        self.iters = 0

    def elapsed(self) -> float:
        return self.clock() - self.t0

    def exhausted(self) -> bool:
        if self.elapsed() >= self.config.budget_seconds:
            return True
        cap = self.config.max_iters
        return cap is not None and self.iters >= cap

    def settle(self, candidate: Solution):
        """Acceptance, best tracking, trajectory, restart handling."""
        if self.check_feasible:
            problems = validate(self.instance, candidate)
            assert not problems, f"infeasible candidate: {problems[:3]}"
        if self.config.accept == "greedy":
            accepted = candidate.cost < self.current.cost - IMPROVE_EPS
            _, _ = sa_accept(self.sa, self.current.cost, candidate.cost, self.rng)
        else:
            accepted, _ = sa_accept(self.sa, self.current.cost, candidate.cost, self.rng)
        if accepted:
            self.current = candidate
        if self.current.cost < self.best.cost - IMPROVE_EPS:
            self.best = self.current.copy()
            self.traj.add(self.elapsed(), self.best.cost)
        if self.sa.restart_pending:
            self.current = self.best.copy()
            self.sa.restart_pending = False
        self.iters += 1

    def result(self) -> Tuple[Solution, TrajectoryRecord]:
        return self.best, self.traj


def _construct_family(run: _Run):
    cfg = run.config
    sol = run.current
    if cfg.construct == "sweep":
        m = len(sol.tours)
        k = min(cfg.sweep_restarts, m)
        starts = [int(s) for s in run.rng.choice(m, size=k, replace=False)]
        return construct_sweep(
            run.instance, sol, cfg.n_target, restarts=k, start_offsets=starts
        )
    if cfg.construct == "knn":
        return construct_knn(run.instance, sol, cfg.knn_tours)
    if cfg.construct == "pairs":
        return construct_pairs(run.instance, sol, cfg.pair_neighbors)
    return construct_add_nn(run.instance, sol, cfg.n_target)


def rr(
    instance: Instance,
    config: SearchConfig,
    clock: Optional[Clock] = None,
    check_feasible: bool = False,
) -> Tuple[Solution, TrajectoryRecord]:
    """Classic ruin recreate: uniform region choice over a sweep-built
    family, best-insertion recreate, SA acceptance."""
    run = _Run(instance, config, "rr", clock, check_feasible)
    recreate = _make_recreate(config, run.rng)
    while not run.exhausted():
        family = construct_sweep(
            instance, run.current, config.n_target, restarts=1,
            start_offsets=[int(run.rng.integers(len(run.current.tours)))],
        )
        g = family[int(run.rng.integers(len(family)))]
        rsg = ruin(instance, run.current, g)
        sub = recreate(rsg)
        candidate = insert_many(instance, run.current, [(rsg, sub)])
        run.settle(candidate)
    return run.result()


def nrr(
    instance: Instance,
    config: SearchConfig,
    scorer,
    clock: Optional[Clock] = None,
    check_feasible: bool = False,
) -> Tuple[Solution, TrajectoryRecord]:
    """Scored ruin recreate: build a sub-graph family, score it (cached),
    select one or several disjoint sub-graphs, recreate them, splice the
    improving ones back and run the acceptance step."""
    run = _Run(instance, config, "nrr", clock, check_feasible)
    recreate = _make_recreate(config, run.rng)
    cache = ScoreCache()
    while not run.exhausted():
        family = _construct_family(run)
        scores = score_all(scorer, instance, run.current, family, cache)
        if config.select == "disjoint":
            chosen = select_disjoint(
                scores, family, config.n_mult, run.rng,
                temperature=config.softmax_temperature,
            )
        elif config.select == "greedy":
            chosen = [select_greedy(scores, family)]
        else:
            chosen = [select_sample(
                scores, family, run.rng, temperature=config.softmax_temperature
            )]

        updates: List[Tuple[RuinedSubGraph, Solution]] = []
        for g in chosen:
            rsg = ruin(instance, run.current, g)
            sub = recreate(rsg)
            if config.select == "disjoint":
                # non-improving disjoint updates are discarded individually
                if sub.cost < rsg.prior_cost - IMPROVE_EPS:
                    updates.append((rsg, sub))
            else:
                updates.append((rsg, sub))
        candidate = insert_many(instance, run.current, updates)
        run.settle(candidate)
    return run.result()
