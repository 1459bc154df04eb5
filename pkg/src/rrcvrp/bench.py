"""Benchmark runner with anytime trajectories and the area-under-savings
metric (normalized area between the cost curve, clamped at 110% of the
savings cost, and that baseline)."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .core import Instance
from .construct import savings_init, sweep_init
from .dataio import TrajectoryRecord, write_trajectory
from .scoring import HeuristicScorer
from .search import SearchConfig, nrr, rr


class MetricError(ValueError):
    pass


DEFAULT_BUDGETS = {500: 60.0, 1000: 120.0, 2000: 240.0, 4000: 480.0}


def gap(cost: float, reference: float) -> float:
    return (cost - reference) / reference


def ausc(trajectory: TrajectoryRecord, savings_cost: float, T: float) -> float:
    """Fraction of the baseline area recovered below 110% of the savings
    cost. The trajectory is a right-constant step curve (duplicate-timestamp
    encoding); before its first point the method "has no solution yet" and is
    charged the baseline; after its last point the value is held until T."""
    if not trajectory.points:
        raise MetricError("empty trajectory")
    b = 1.1 * savings_cost
    pts: List[Tuple[float, float]] = []
    first_t = trajectory.points[0][0]
    if first_t > 0:
        pts += [(0.0, b), (first_t, b)]
    elif first_t < 0:
        raise MetricError("negative timestamp")
    last_v = b
    for t, v in trajectory.points:
        if t > T:
            pts.append((T, min(last_v, b)))
            break
        pts.append((t, min(v, b)))
        last_v = v
    if pts[-1][0] < T:
        pts.append((T, min(last_v, b)))
    # composite trapezoid; exact for the step encoding
    area = 0.0
    for (t0, v0), (t1, v1) in zip(pts[:-1], pts[1:]):
        area += 0.5 * (v0 + v1) * (t1 - t0)
    total = b * T
    return (total - area) / total


@dataclass
class BenchPlan:
    instances: List[Instance]
    methods: List[Tuple[str, SearchConfig]]
    budgets: Dict[int, float] = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2])
    scorer_factory: Optional[Callable[[], object]] = None  # for nrr rows

    def budget_for(self, instance: Instance, config: SearchConfig) -> float:
        return self.budgets.get(instance.n, config.budget_seconds)


@dataclass
class BenchRow:
    method: str
    instance: str
    seed: int
    final_cost: float
    ausc: float
    wall_s: float
    trajectory: TrajectoryRecord
    failed: bool = False


@dataclass
class BenchReport:
    rows: List[BenchRow]
    savings_costs: Dict[str, float]

    def aggregates(self) -> Dict[str, Tuple[float, float]]:
        """method -> (mean final cost, std over rows)."""
        by_method: Dict[str, List[float]] = {}
        for row in self.rows:
            if not row.failed:
                by_method.setdefault(row.method, []).append(row.final_cost)
        out = {}
        for m, costs in by_method.items():
            std = statistics.pstdev(costs) if len(costs) > 1 else 0.0
            out[m] = (statistics.fmean(costs), std)
        return out

    def to_csv(self) -> str:
        lines = ["method,instance,seed,final_cost,ausc,wall_s"]
        for r in self.rows:
            lines.append(
                f"{r.method},{r.instance},{r.seed},"
                f"{r.final_cost!r},{r.ausc!r},{r.wall_s:.3f}"
            )
        return "\n".join(lines) + "\n"


def _run_method(name, config, instance, seed, budget, scorer_factory, clock):
    from dataclasses import replace

    cfg = replace(config, seed=seed, budget_seconds=budget)
    if name == "savings" or name == "sweep":
        sol = savings_init(instance) if name == "savings" else sweep_init(instance)
        traj = TrajectoryRecord(metadata={
            "method": name, "seed": seed, "instance": instance.name, "budget": budget,
        })
        traj.add(0.0, sol.cost)
        return sol, traj
    if name.startswith("rr"):
        return rr(instance, cfg, clock=clock)
    if name.startswith("nrr"):
        scorer = scorer_factory() if scorer_factory is not None else HeuristicScorer()
        return nrr(instance, cfg, scorer, clock=clock)
    raise ValueError(f"unknown method {name!r}")


def run_bench(plan: BenchPlan, clock=None) -> BenchReport:
    """Run every (method, instance, seed) cell under its budget. A crashing
    method marks its row failed; the run continues."""
    rows: List[BenchRow] = []
    savings_costs: Dict[str, float] = {}
    for instance in plan.instances:
        savings_costs[instance.name] = savings_init(instance).cost
    for instance in plan.instances:
        base = savings_costs[instance.name]
        for name, config in plan.methods:
            budget = plan.budget_for(instance, config)
            for seed in plan.seeds:
                t_start = time.monotonic()
                try:
                    sol, traj = _run_method(
                        name, config, instance, seed, budget,
                        plan.scorer_factory, clock,
                    )
                    rows.append(BenchRow(
                        method=name,
                        instance=instance.name,
                        seed=seed,
                        final_cost=sol.cost,
                        ausc=ausc(traj, base, budget),
                        wall_s=time.monotonic() - t_start,
                        trajectory=traj,
                    ))
                except Exception:
                    rows.append(BenchRow(
                        method=name, instance=instance.name, seed=seed,
                        final_cost=float("nan"), ausc=0.0,
                        wall_s=time.monotonic() - t_start,
                        trajectory=TrajectoryRecord(), failed=True,
                    ))
    return BenchReport(rows=rows, savings_costs=savings_costs)


def emit_artifacts(report: BenchReport, out_dir) -> List[str]:
    """Write the report CSV plus one trajectory CSV per row; returns paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    report_path = os.path.join(out_dir, "report.csv")
    with open(report_path, "w") as fh:
        fh.write(report.to_csv())
    paths.append(report_path)
    for r in report.rows:
        if r.failed:
            continue
        p = os.path.join(out_dir, f"traj_{r.method}_{r.instance}_s{r.seed}.csv")
        with open(p, "w") as fh:
            fh.write(write_trajectory(r.trajectory))
        paths.append(p)
    return paths
