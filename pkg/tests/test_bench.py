import math
import os

import numpy as np
import pytest

from rrcvrp.bench import (
    BenchPlan,
    BenchReport,
    MetricError,
    ausc,
    emit_artifacts,
    gap,
    run_bench,
)
from rrcvrp.dataio import TrajectoryRecord
from rrcvrp.search import SearchConfig

from support import FakeClock, random_instance


class TestGap:
    def test_values(self):
        assert gap(110, 100) == pytest.approx(0.10)
        assert gap(100, 100) == 0.0
        assert gap(95, 100) == pytest.approx(-0.05)


class TestAusc:
    def test_constant_at_savings(self):
        traj = TrajectoryRecord(points=[(0.0, 100.0)])
        assert ausc(traj, 100.0, 10.0) == pytest.approx(0.1 / 1.1, abs=1e-9)

    def test_always_above_baseline_is_zero(self):
        traj = TrajectoryRecord(points=[(0.0, 200.0), (5.0, 150.0)])
        assert ausc(traj, 100.0, 10.0) == 0.0

    def test_hand_integrated_step(self):
        # area under min(c, 110) with the step encoding:
        # 110 on [0,5], 88 on [5,10] -> (1100 - 990)/1100 = 0.1
        traj = TrajectoryRecord(
            points=[(0.0, 110.0), (5.0, 110.0), (5.0, 88.0), (10.0, 88.0)]
        )
        assert ausc(traj, 100.0, 10.0) == pytest.approx(0.1, abs=1e-9)

    def test_baseline_charged_before_first_point(self):
        # first solution arrives at t=5 with cost 88; same area as the
        # explicit step example above
        traj = TrajectoryRecord(points=[(5.0, 88.0)])
        assert ausc(traj, 100.0, 10.0) == pytest.approx(0.1, abs=1e-9)

    def test_last_value_held_to_horizon(self):
        traj = TrajectoryRecord(points=[(0.0, 55.0)])
        assert ausc(traj, 100.0, 10.0) == pytest.approx((110 - 55) / 110)

    def test_points_beyond_horizon_ignored(self):
        a = TrajectoryRecord(points=[(0.0, 100.0)])
        b = TrajectoryRecord(points=[(0.0, 100.0), (12.0, 1.0)])
        assert ausc(a, 100.0, 10.0) == ausc(b, 100.0, 10.0)

    def test_empty_trajectory_rejected(self):
        with pytest.raises(MetricError):
            ausc(TrajectoryRecord(), 100.0, 10.0)

    def test_negative_timestamp_rejected(self):
        with pytest.raises(MetricError):
            ausc(TrajectoryRecord(points=[(-1.0, 50.0)]), 100.0, 10.0)

    def test_in_unit_interval_and_antitone(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            k = int(rng.integers(1, 6))
            ts = np.sort(rng.uniform(0, 10, size=k))
            vs = rng.uniform(20, 300, size=k)
            pts = list(zip(ts.tolist(), vs.tolist()))
            v = ausc(TrajectoryRecord(points=pts), 100.0, 10.0)
            assert 0.0 <= v <= 1.0
            raised = [(t, c + 10.0) for t, c in pts]
            assert ausc(TrajectoryRecord(points=raised), 100.0, 10.0) <= v + 1e-12


class TestRunBench:
    def _plan(self, methods, seeds=(0,)):
        instances = [random_instance(s, n=30) for s in (50, 51)]
        return BenchPlan(
            instances=instances,
            methods=methods,
            budgets={},  # fall back to per-config budgets
            seeds=list(seeds),
        )

    def test_savings_only_ausc(self):
        plan = self._plan([("savings", SearchConfig(budget_seconds=5.0))])
        report = run_bench(plan, clock=FakeClock())
        assert len(report.rows) == 2
        for row in report.rows:
            assert not row.failed
            assert row.ausc == pytest.approx(0.1 / 1.1, abs=1e-9)

    def test_deterministic_method_zero_std(self):
        plan = BenchPlan(
            instances=[random_instance(50, n=30)],
            methods=[("savings", SearchConfig(budget_seconds=5.0))],
            budgets={},
            seeds=[0, 1, 2],
        )
        report = run_bench(plan, clock=FakeClock())
        for mean, std in report.aggregates().values():
            assert std == 0.0

    def test_nrr_rows_dominate_savings(self):
        cfg = SearchConfig(budget_seconds=1e9, max_iters=25, n_target=10)
        plan = self._plan([
            ("savings", SearchConfig(budget_seconds=5.0)),
            ("nrr", cfg),
        ])
        report = run_bench(plan, clock=FakeClock())
        by = {}
        for r in report.rows:
            by.setdefault(r.instance, {})[r.method] = r.final_cost
        for costs in by.values():
            assert costs["nrr"] <= costs["savings"] + 1e-9

    def test_crashing_method_marks_row_failed(self):
        bad = SearchConfig(recreate="external", budget_seconds=5.0)
        # external recreate without an ExternalConfig raises inside the run
        plan = self._plan([("rr", bad)])
        report = run_bench(plan, clock=FakeClock())
        assert all(r.failed for r in report.rows)
        assert all(math.isnan(r.final_cost) for r in report.rows)

    def test_aggregates_match_recomputation(self):
        plan = self._plan(
            [("savings", SearchConfig(budget_seconds=5.0))], seeds=(0, 1)
        )
        report = run_bench(plan, clock=FakeClock())
        agg = report.aggregates()["savings"]
        raw = [r.final_cost for r in report.rows if not r.failed]
        assert agg[0] == pytest.approx(sum(raw) / len(raw))

    def test_emit_artifacts(self, tmp_path):
        plan = self._plan([("savings", SearchConfig(budget_seconds=5.0))])
        report = run_bench(plan, clock=FakeClock())
        paths = emit_artifacts(report, tmp_path)
        assert os.path.basename(paths[0]) == "report.csv"
        assert len(paths) == 1 + len(report.rows)
        header = open(paths[0]).readline().strip()
        assert header == "method,instance,seed,final_cost,ausc,wall_s"
