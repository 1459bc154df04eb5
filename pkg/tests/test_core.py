import math

import numpy as np
import pytest

from rrcvrp.core import (
    IndexError_,
    Instance,
    Solution,
    distance,
    solution_cost,
    validate,
)

from support import random_instance


class TestDistance:
    def test_three_four_five(self, triangle_instance):
        assert distance(triangle_instance, 0, 1) == 5.0

    def test_identity(self, triangle_instance):
        assert distance(triangle_instance, 1, 1) == 0.0

    def test_unit_square_diagonal(self, triangle_instance):
        assert distance(triangle_instance, 2, 3) == pytest.approx(math.sqrt(2))

    def test_symmetry(self, triangle_instance):
        for i in range(4):
            for j in range(4):
                assert distance(triangle_instance, i, j) == distance(triangle_instance, j, i)

    def test_invalid_index(self, triangle_instance):
        with pytest.raises(IndexError_):
            distance(triangle_instance, 0, 17)

    def test_rounding_mode(self):
        inst = Instance("r", (0, 0), np.array([[1.0, 1.0]]), np.array([1.0]),
                        capacity=5.0, rounding="round")
        assert distance(inst, 0, 1) == 1.0  # sqrt(2) rounds to 1

    def test_triangle_inequality_random(self):
        inst = random_instance(0, n=40)
        dm = inst.distance_matrix
        rng = np.random.default_rng(1)
        for _ in range(300):
            i, j, k = rng.integers(0, inst.n + 1, size=3)
            assert dm[i, k] <= dm[i, j] + dm[j, k] + 1e-12


class TestSolutionCost:
    def test_out_and_back(self, tiny_instance):
        sol = Solution.from_tours(tiny_instance, [[1]])
        assert sol.cost == pytest.approx(2.0)

    def test_two_singletons(self, tiny_instance):
        sol = Solution.from_tours(tiny_instance, [[1], [2]])
        assert sol.cost == pytest.approx(4.0)

    def test_pair_tour(self, tiny_instance):
        sol = Solution.from_tours(tiny_instance, [[1, 2]])
        assert sol.cost == pytest.approx(2.0 + math.sqrt(2))

    @pytest.mark.parametrize("seed", range(5))
    def test_invariant_under_reversal_and_permutation(self, seed):
        inst = random_instance(seed, n=25, capacity=10.0)
        rng = np.random.default_rng(seed)
        # random feasible partition into singleton-ish tours
        perm = list(rng.permutation(inst.n) + 1)
        tours, cur, load = [], [], 0.0
        for i in perm:
            if cur and load + inst.demands[i - 1] > inst.capacity:
                tours.append(cur)
                cur, load = [], 0.0
            cur.append(int(i))
            load += inst.demands[i - 1]
        tours.append(cur)
        base = solution_cost(inst, Solution(tours=tours))
        flipped = [list(reversed(t)) for t in tours]
        shuffled = [flipped[int(k)] for k in rng.permutation(len(tours))]
        assert solution_cost(inst, Solution(tours=shuffled)) == pytest.approx(base, rel=1e-9)

    def test_cached_cost_recomputable(self, tiny_instance):
        sol = Solution.from_tours(tiny_instance, [[1, 2]])
        assert abs(sol.cost - solution_cost(tiny_instance, sol)) < 1e-9 * sol.cost


class TestValidate:
    def test_feasible(self, tiny_instance):
        sol = Solution.from_tours(tiny_instance, [[1], [2]])
        assert validate(tiny_instance, sol) == []

    def test_duplicate(self, tiny_instance):
        sol = Solution.from_tours(tiny_instance, [[1], [1, 2]])
        report = validate(tiny_instance, sol)
        assert len([v for v in report if "served 2 times" in v]) == 1

    def test_capacity_violation(self):
        inst = Instance("cap", (0, 0), np.array([[1.0, 0.0], [0.0, 1.0]]),
                        np.array([30.0, 21.0]), capacity=50.0)
        sol = Solution.from_tours(inst, [[1, 2]])
        report = validate(inst, sol)
        assert any("tour 0" in v and "capacity" in v for v in report)

    def test_missing_node(self, tiny_instance):
        sol = Solution.from_tours(tiny_instance, [[1]])
        assert any("customer 2: missing" in v for v in validate(tiny_instance, sol))

    def test_empty_report_implies_exact_partition(self):
        inst = random_instance(3, n=20, capacity=100.0)
        tours = [[i] for i in range(1, 21)]
        sol = Solution.from_tours(inst, tours)
        assert validate(inst, sol) == []
        counts = np.bincount([i for t in sol.tours for i in t], minlength=21)
        assert (counts[1:] == 1).all()


class TestInstanceInvariants:
    def test_rejects_excess_demand(self):
        with pytest.raises(ValueError):
            Instance("bad", (0, 0), np.array([[1.0, 1.0]]), np.array([9.0]), capacity=5.0)

    def test_rejects_nonfinite_coords(self):
        with pytest.raises(ValueError):
            Instance("bad", (0, 0), np.array([[np.inf, 1.0]]), np.array([1.0]), capacity=5.0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Instance("bad", (0, 0), np.zeros((0, 2)), np.zeros(0), capacity=5.0)
