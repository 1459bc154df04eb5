"""Initial-solution construction: Clarke-Wright savings (parallel variant),
the angular sweep heuristic, and best insertion."""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np

from .core import Instance, Solution, solution_cost


def savings_list(instance: Instance) -> np.ndarray:
    """All pairwise savings d(0,i)+d(0,j)-d(i,j) for i<j, sorted by value
    descending with (i, j) lexicographic tie-break. Returns (M, 3) array of
    (i, j, value) rows."""
    dm = instance.distance_matrix
    n = instance.n
    ii, jj = np.triu_indices(n, k=1)
    ii += 1
    jj += 1
    vals = dm[0, ii] + dm[0, jj] - dm[ii, jj]
    order = np.lexsort((jj, ii, -vals))
    return np.column_stack([ii[order], jj[order], vals[order]])


def savings_init(instance: Instance) -> Solution:
    """Parallel Clarke-Wright savings: start from singleton tours and apply
    the highest-value feasible merge until no positive saving remains.

    Savings values are static, so a single pass over the sorted list is
    equivalent to repeatedly picking the best feasible merge (feasibility
    only degrades: endpoints become interior and loads only grow)."""
    n = instance.n
    q = instance.demands
    route_of = list(range(n + 1))        # customer -> route id (1-based entry i)
    routes = {i: [i] for i in range(1, n + 1)}
    loads = {i: float(q[i - 1]) for i in range(1, n + 1)}

    for i, j, val in savings_list(instance):
        if val <= 0.0:
            break
        i, j = int(i), int(j)
        ri, rj = route_of[i], route_of[j]
        if ri == rj:
            continue
        a, b = routes[ri], routes[rj]
        # both endpoints must still be adjacent to the depot
        if not (a[0] == i or a[-1] == i) or not (b[0] == j or b[-1] == j):
            continue
        if loads[ri] + loads[rj] > instance.capacity:
            continue
        if a[-1] != i:
            a.reverse()
        if b[0] != j:
            b.reverse()
        a.extend(b)
        for node in b:
            route_of[node] = ri
        loads[ri] += loads[rj]
        del routes[rj], loads[rj]

    return Solution.from_tours(instance, routes.values())


def sweep_order(instance: Instance) -> List[int]:
    """Customers in beam order: polar angle around the depot starting at the
    angle of customer 1, ties broken by radius ascending then index."""
    dx = instance.customers[:, 0] - instance.depot[0]
    dy = instance.customers[:, 1] - instance.depot[1]
    angles = np.arctan2(dy, dx)
    radii = np.hypot(dx, dy)
    start = angles[0]
    rel = np.mod(angles - start, 2.0 * math.pi)
    order = np.lexsort((np.arange(instance.n), radii, rel))
    return [int(i) + 1 for i in order]


def sweep_init(instance: Instance) -> Solution:
    """Sweep construction: fill the current tour in beam order, opening a new
    tour when the next customer would exceed capacity."""
    tours: List[List[int]] = []
    current: List[int] = []
    load = 0.0
    for i in sweep_order(instance):
        d = instance.demands[i - 1]
        if current and load + d > instance.capacity:
            tours.append(current)
            current, load = [], 0.0
        current.append(i)
        load += d
    if current:
        tours.append(current)
    return Solution.from_tours(instance, tours)


def best_insertion(
    instance: Instance,
    partial: Solution,
    unserved: Sequence[int],
    order: Optional[Sequence[int]] = None,
    return_deltas: bool = False,
):
    """Insert unserved customers one at a time at the cheapest feasible
    (tour, position); opens a singleton tour when nothing feasible exists or
    the out-and-back cost beats every feasible detour.

    Default insertion order is farthest-from-depot first; pass `order` to
    override (e.g. a random permutation for restarts)."""
    dm = instance.distance_matrix
    q = instance.demands
    cap = instance.capacity

    tours = [list(t) for t in partial.tours]
    loads = [sum(q[i - 1] for i in t) for t in tours]

    if order is None:
        order = sorted(unserved, key=lambda i: (-dm[0, i], i))
    else:
        order = list(order)
        assert set(order) == set(unserved)

    # flat depot-closed edge list (a, b) over all tours, kept incrementally:
    # inserting a node only splits one edge, so the list never needs a rebuild
    arr_a, arr_b, arr_t = [], [], []
    for ti, t in enumerate(tours):
        prev = 0
        for b in t:
            arr_a.append(prev)
            arr_b.append(b)
            arr_t.append(ti)
            prev = b
        arr_a.append(prev)
        arr_b.append(0)
        arr_t.append(ti)
    # preallocate for the worst case: every node adds at most two edges
    # (new singleton tour) and at most one tour
    ne, nt = len(arr_a), len(tours)
    cap_e = ne + 2 * len(order)
    ea = np.zeros(cap_e, dtype=np.intp)
    eb = np.zeros(cap_e, dtype=np.intp)
    et = np.zeros(cap_e, dtype=np.intp)
    ea[:ne], eb[:ne], et[:ne] = arr_a, arr_b, arr_t
    # edge lengths dm[a, b], maintained incrementally alongside the edge list
    dab = np.zeros(cap_e)
    dab[:ne] = dm[ea[:ne], eb[:ne]]
    loads_arr = np.zeros(nt + len(order))
    loads_arr[:nt] = loads

    deltas = []
    for node in order:
        dq = q[node - 1]
        dmn = dm[node]  # the matrix is symmetric: dm[a, node] == dmn[a]
        new_tour_delta = 2.0 * dmn[0]
        if ne:
            a, b, t = ea[:ne], eb[:ne], et[:ne]
            d = dmn[a] + dmn[b] - dab[:ne]
            d[loads_arr[t] + dq > cap] = np.inf
            best = int(np.argmin(d))
            # new tour only if out-and-back is strictly cheaper than every
            # feasible detour (infeasible edges carry +inf)
            if d[best] <= new_tour_delta:
                ti = int(et[best])
                # position within tour ti: count this tour's earlier edges
                pos = int(np.count_nonzero(et[:best] == ti))
                tours[ti].insert(pos, node)
                loads_arr[ti] += dq
                # split edge (a, b) into (a, node), (node, b)
                b_old = eb[best]
                eb[best] = node
                ea[best + 2:ne + 1] = ea[best + 1:ne].copy()
                eb[best + 2:ne + 1] = eb[best + 1:ne].copy()
                et[best + 2:ne + 1] = et[best + 1:ne].copy()
                dab[best + 2:ne + 1] = dab[best + 1:ne].copy()
                ea[best + 1], eb[best + 1], et[best + 1] = node, b_old, ti
                dab[best] = dmn[ea[best]]
                dab[best + 1] = dmn[b_old]
                ne += 1
                deltas.append(float(d[best]))
                continue
        ti = len(tours)
        tours.append([node])
        loads_arr[ti] = dq
        ea[ne:ne + 2] = (0, node)
        eb[ne:ne + 2] = (node, 0)
        et[ne:ne + 2] = (ti, ti)
        dab[ne:ne + 2] = dmn[0]
        ne += 2
        deltas.append(float(new_tour_delta))

    sol = Solution.from_tours(instance, tours)
    if return_deltas:
        return sol, deltas
    return sol
