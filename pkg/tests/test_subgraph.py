import numpy as np
import pytest

from rrcvrp.core import Instance, Solution, validate
from rrcvrp.construct import savings_init
from rrcvrp.subgraph import (
    CoverageError,
    StalenessError,
    construct_add_nn,
    construct_knn,
    construct_pairs,
    construct_sweep,
    insert,
    insert_many,
    make_subgraph,
    ruin,
    tour_centers,
)

from support import random_instance


def _ring_instance(n_tours, tour_size, radius=10.0):
    """Tours of equal size placed at distinct angles around the depot."""
    pts = []
    for t in range(n_tours):
        ang = 2 * np.pi * t / n_tours
        cx, cy = radius * np.cos(ang), radius * np.sin(ang)
        for j in range(tour_size):
            pts.append([cx + 0.01 * j, cy])
    inst = Instance(
        "ring", (0, 0), np.array(pts), np.ones(n_tours * tour_size),
        capacity=float(tour_size),
    )
    tours = [
        list(range(1 + t * tour_size, 1 + (t + 1) * tour_size))
        for t in range(n_tours)
    ]
    return inst, Solution.from_tours(inst, tours)


class TestTourCenters:
    def test_arithmetic_mean(self):
        inst = Instance("m", (5, 5),
                        np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]]),
                        np.ones(3), capacity=5.0)
        sol = Solution.from_tours(inst, [[1, 2, 3]])
        assert tour_centers(inst, sol)[0].center == (1.0, 1.0)

    def test_singleton(self):
        inst = Instance("s", (0, 0), np.array([[0.3, 0.7]]), np.ones(1), capacity=5.0)
        sol = Solution.from_tours(inst, [[1]])
        assert tour_centers(inst, sol)[0].center == (0.3, 0.7)

    def test_permutation_invariant(self):
        inst = random_instance(0, n=6, capacity=100.0)
        a = Solution.from_tours(inst, [[1, 2, 3, 4, 5, 6]])
        b = Solution.from_tours(inst, [[4, 2, 6, 1, 3, 5]])
        assert tour_centers(inst, a)[0].center == pytest.approx(
            tour_centers(inst, b)[0].center
        )


class TestConstructKnn:
    def test_k_zero_yields_single_tours(self):
        inst, sol = _ring_instance(4, 3)
        sgs = construct_knn(inst, sol, 0)
        assert len(sgs) == 4
        assert all(len(g.tour_indices) == 1 for g in sgs)

    def test_k_large_collapses_to_full_solution(self):
        inst, sol = _ring_instance(4, 3)
        sgs = construct_knn(inst, sol, 10)
        assert len(sgs) == 1
        assert sgs[0].size == inst.n

    def test_collinear_pairing(self):
        # 3 collinear tour centers: middle pairs with its nearer neighbor
        pts = np.array([[1.0, 1.0], [2.0, 1.0], [4.0, 1.0]])
        inst = Instance("line", (0, 0), pts, np.ones(3), capacity=1.0)
        sol = Solution.from_tours(inst, [[1], [2], [3]])
        sgs = construct_knn(inst, sol, 1)
        assert len(sgs) <= 3
        keys = {g.key for g in sgs}
        assert (1, 2) in keys  # middle tour pairs with the nearer center


class TestConstructPairs:
    def test_all_pairs_have_two_tours(self):
        inst, sol = _ring_instance(6, 3)
        sgs = construct_pairs(inst, sol, 3)
        assert all(len(g.tour_indices) == 2 for g in sgs)

    def test_k_grows_the_family(self):
        inst, sol = _ring_instance(8, 3)
        assert len(construct_pairs(inst, sol, 1)) < len(construct_pairs(inst, sol, 3))

    def test_family_is_deduplicated(self):
        inst, sol = _ring_instance(5, 3)
        sgs = construct_pairs(inst, sol, 4)
        keys = [g.key for g in sgs]
        assert len(keys) == len(set(keys))
        # 5 tours, every partner: all C(5,2) unordered pairs
        assert len(sgs) == 10

    def test_single_tour_falls_back_to_itself(self):
        inst, sol = _ring_instance(1, 5)
        sgs = construct_pairs(inst, sol, 3)
        assert len(sgs) == 1
        assert sgs[0].tour_indices == (0,)


class TestConstructAddNn:
    def test_exact_multiple(self):
        inst, sol = _ring_instance(6, 10)
        sgs = construct_add_nn(inst, sol, n_target=30, epsilon=5)
        assert all(g.size == 30 for g in sgs)

    def test_target_below_tour_size(self):
        inst, sol = _ring_instance(4, 10)
        sgs = construct_add_nn(inst, sol, n_target=3)
        assert all(len(g.tour_indices) == 1 for g in sgs)

    def test_single_tour_solution(self):
        inst, sol = _ring_instance(1, 5)
        assert len(construct_add_nn(inst, sol, n_target=100)) == 1


class TestConstructSweep:
    def test_partition_of_six_ring_tours(self):
        inst, sol = _ring_instance(6, 50)
        sgs = construct_sweep(inst, sol, n_target=100, restarts=1)
        assert len(sgs) == 3
        assert all(len(g.tour_indices) == 2 for g in sgs)
        covered = sorted(i for g in sgs for i in g.nodes)
        assert covered == list(range(1, inst.n + 1))

    def test_huge_target_gives_whole_solution(self):
        inst, sol = _ring_instance(5, 4)
        sgs = construct_sweep(inst, sol, n_target=1000, restarts=1)
        assert len(sgs) == 1
        assert sgs[0].size == inst.n

    def test_restart_dedup_on_symmetric_ring(self):
        inst, sol = _ring_instance(6, 50)
        one = construct_sweep(inst, sol, 100, restarts=1, start_offsets=[0])
        both = construct_sweep(inst, sol, 100, restarts=2, start_offsets=[0, 2])
        # offset 2 pairs the same tours (rotation by a whole sub-graph)
        assert {g.key for g in both} == {g.key for g in one}

    @pytest.mark.parametrize("seed", range(6))
    def test_single_sweep_partitions_random_solutions(self, seed):
        inst = random_instance(300 + seed, n=80)
        sol = savings_init(inst)
        sgs = construct_sweep(inst, sol, n_target=25, restarts=1)
        tours = sorted(t for g in sgs for t in g.tour_indices)
        assert tours == list(range(len(sol.tours)))
        for g in sgs:
            assert g.size == len(g.nodes)

    def test_key_invariance(self):
        inst, sol = _ring_instance(3, 4)
        a = make_subgraph(inst, sol, [0, 2])
        b = make_subgraph(inst, sol, [2, 0])
        assert a.key == b.key


class TestRuinInsert:
    def test_prior_cost_and_counts(self):
        inst = random_instance(5, n=30)
        sol = savings_init(inst)
        g = make_subgraph(inst, sol, [0])
        rsg = ruin(inst, sol, g)
        from rrcvrp.core import tour_length
        assert rsg.prior_cost == pytest.approx(tour_length(inst, sol.tours[0]))
        assert rsg.sub_instance.n == g.size
        assert list(rsg.sub_instance.demands) == [
            inst.demands[i - 1] for i in g.nodes
        ]

    def test_identity_round_trip(self):
        inst = random_instance(6, n=40)
        sol = savings_init(inst)
        sgs = construct_sweep(inst, sol, 15, restarts=1)
        g = sgs[0]
        rsg = ruin(inst, sol, g)
        # rebuild the exact removed tours in local indexing
        to_local = {n: i + 1 for i, n in enumerate(rsg.global_nodes)}
        local_tours = [
            [to_local[i] for i in sol.tours[t]] for t in g.tour_indices
        ]
        sub = Solution.from_tours(rsg.sub_instance, local_tours)
        out = insert(inst, sol, rsg, sub)
        assert out.cost == pytest.approx(sol.cost, rel=1e-12)
        assert validate(inst, out) == []

    def test_cost_delta_additivity(self):
        inst = random_instance(8, n=40)
        sol = savings_init(inst)
        g = make_subgraph(inst, sol, [0, 1])
        rsg = ruin(inst, sol, g)
        from rrcvrp.recreate import recreate_savings
        sub = recreate_savings(rsg)
        out = insert(inst, sol, rsg, sub)
        assert out.cost - sol.cost == pytest.approx(
            sub.cost - rsg.prior_cost, abs=1e-9
        )
        assert validate(inst, out) == []

    def test_missing_node_coverage_error(self):
        inst = random_instance(9, n=20)
        sol = savings_init(inst)
        g = make_subgraph(inst, sol, [0])
        rsg = ruin(inst, sol, g)
        bad = Solution(tours=[[1]], cost=1.0)
        if len(rsg.global_nodes) > 1:
            with pytest.raises(CoverageError):
                insert(inst, sol, rsg, bad)

    def test_stale_subgraph_detected(self):
        inst = random_instance(10, n=20)
        sol = savings_init(inst)
        g = make_subgraph(inst, sol, [0])
        mutated = sol.copy()
        mutated.tours[0] = mutated.tours[0][::-1] + []
        mutated.tours[0].append(mutated.tours[-1].pop()) if len(mutated.tours) > 1 else None
        if len(sol.tours) > 1:
            with pytest.raises(StalenessError):
                ruin(inst, mutated, g)

    def test_insert_many_order_independent(self):
        inst = random_instance(12, n=60)
        sol = savings_init(inst)
        sgs = construct_sweep(inst, sol, 15, restarts=1)
        from rrcvrp.recreate import recreate_savings
        updates = []
        for g in sgs[:3]:
            rsg = ruin(inst, sol, g)
            updates.append((rsg, recreate_savings(rsg)))
        a = insert_many(inst, sol, updates)
        b = insert_many(inst, sol, list(reversed(updates)))
        assert a.cost == pytest.approx(b.cost, rel=1e-9)
        assert validate(inst, a) == [] and validate(inst, b) == []
