"""Sub-graph handling: bundles of whole tours treated as independent CVRPs.

A SubGraph references tours of a concrete Solution; ruin() extracts it as a
standalone instance, insert() splices a sub-solution back into the global
solution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Instance, Solution, tour_length


class StalenessError(RuntimeError):
    """SubGraph no longer matches the solution it was built from."""


class CoverageError(ValueError):
    """Sub-solution does not cover exactly the SubGraph's node set."""


@dataclass(frozen=True)
class TourCenter:
    tour_index: int
    center: Tuple[float, float]


@dataclass(frozen=True)
class SubGraph:
    """A set of whole tours. `key` is the canonical identity (sorted global
    node indices), invariant under tour/node enumeration order."""

    tour_indices: Tuple[int, ...]
    nodes: Tuple[int, ...]
    center: Tuple[float, float]

    @property
    def key(self) -> Tuple[int, ...]:
        return self.nodes

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass
class RuinedSubGraph:
    """A SubGraph with all edges dropped: an independent CVRP plus the
    bookkeeping needed to splice a recreated solution back in."""

    sub_instance: Instance
    global_nodes: Tuple[int, ...]  # local customer i (1-based) -> global_nodes[i-1]
    prior_cost: float
    subgraph: SubGraph


def tour_centers(instance: Instance, solution: Solution) -> List[TourCenter]:
    """Geometric center (mean customer coordinate) of every tour."""
    centers = _centers_array(instance, solution)
    return [TourCenter(ti, (float(c[0]), float(c[1])))
            for ti, c in enumerate(centers)]


def _centers_array(instance: Instance, solution: Solution) -> np.ndarray:
    if not solution.tours:
        return np.empty((0, 2))
    flat = [i - 1 for t in solution.tours for i in t]
    sizes = np.array([len(t) for t in solution.tours])
    offsets = np.concatenate([[0], np.cumsum(sizes[:-1])])
    sums = np.add.reduceat(instance.customers[flat], offsets, axis=0)
    return sums / sizes[:, None]


def make_subgraph(
    instance: Instance,
    solution: Solution,
    tour_idx: Sequence[int],
    centers: Optional[np.ndarray] = None,
) -> SubGraph:
    tour_idx = tuple(sorted(set(int(t) for t in tour_idx)))
    nodes = sorted(i for t in tour_idx for i in solution.tours[t])
    if centers is None:
        centers = _centers_array(instance, solution)
    c = centers[list(tour_idx)].mean(axis=0)
    return SubGraph(tour_indices=tour_idx, nodes=tuple(nodes), center=(float(c[0]), float(c[1])))


def _dedup(sgs: List[SubGraph]) -> List[SubGraph]:
    seen: Dict[Tuple[int, ...], SubGraph] = {}
    for g in sgs:
        seen.setdefault(g.key, g)
    return [seen[k] for k in sorted(seen)]


def construct_knn(instance: Instance, solution: Solution, k: int) -> List[SubGraph]:
    """For each tour: that tour plus its k nearest tours by center distance."""
    centers = _centers_array(instance, solution)
    m = len(centers)
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    sgs = []
    for t in range(m):
        order = np.lexsort((np.arange(m), dist[t]))
        members = [t] + [int(o) for o in order[: min(k, m - 1)]]
        sgs.append(make_subgraph(instance, solution, members, centers=centers))
    return _dedup(sgs)


def construct_pairs(instance: Instance, solution: Solution, k: int) -> List[SubGraph]:
    """For each tour: one pair sub-graph with each of its k nearest tours.

    Unlike construct_knn, which bundles a tour with all of its k neighbors
    into one sub-graph, this keeps the sub-graphs small (two tours) while
    still reaching past the single nearest neighbor — a much larger family
    of cheap moves."""
    centers = _centers_array(instance, solution)
    m = len(centers)
    if m == 1:
        return [make_subgraph(instance, solution, [0], centers=centers)]
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    sgs = []
    for t in range(m):
        order = np.lexsort((np.arange(m), dist[t]))
        for j in order[: min(k, m - 1)]:
            sgs.append(make_subgraph(instance, solution, [t, int(j)], centers=centers))
    return _dedup(sgs)


def _grow(sizes: List[int], candidates: List[int], start_size: int,
          n_target: int, epsilon: float) -> int:
    """How many candidates to take, under the closure rule: stop once the gap
    |n_target - N_g| falls below epsilon or would grow by taking the next."""
    taken = 0
    ng = start_size
    for c in candidates:
        gap = abs(n_target - ng)
        if gap < epsilon:
            break
        if abs(n_target - (ng + sizes[c])) >= gap:
            break
        ng += sizes[c]
        taken += 1
    return taken


def construct_add_nn(
    instance: Instance,
    solution: Solution,
    n_target: int,
    epsilon: Optional[float] = None,
) -> List[SubGraph]:
    """For each reference tour, add neighbors in ascending center distance
    until the sub-graph size closes on n_target."""
    if epsilon is None:
        epsilon = 0.1 * n_target
    centers = _centers_array(instance, solution)
    sizes = [len(t) for t in solution.tours]
    m = len(centers)
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    sgs = []
    for t in range(m):
        order = [int(o) for o in np.lexsort((np.arange(m), dist[t]))][: m - 1]
        take = _grow(sizes, order, sizes[t], n_target, epsilon)
        sgs.append(make_subgraph(instance, solution, [t] + order[:take],
                                 centers=centers))
    return _dedup(sgs)


def _angular_tour_order(instance: Instance, centers: np.ndarray) -> List[int]:
    dx = centers[:, 0] - instance.depot[0]
    dy = centers[:, 1] - instance.depot[1]
    angles = np.arctan2(dy, dx)
    radii = np.hypot(dx, dy)
    order = np.lexsort((np.arange(len(centers)), radii, angles))
    return [int(o) for o in order]


def construct_sweep(
    instance: Instance,
    solution: Solution,
    n_target: int,
    restarts: int = 1,
    epsilon: Optional[float] = None,
    start_offsets: Optional[Sequence[int]] = None,
) -> List[SubGraph]:
    """Rotate a beam over tour centers, accumulating tours into sub-graphs of
    roughly n_target customers. One sweep partitions the tour set; multiple
    restarts begin at different tour centers and the union is deduplicated."""
    if epsilon is None:
        epsilon = 0.1 * n_target
    centers = _centers_array(instance, solution)
    order = _angular_tour_order(instance, centers)
    m = len(order)
    sizes = [len(t) for t in solution.tours]
    if start_offsets is None:
        start_offsets = [round(r * m / restarts) % m for r in range(restarts)]

    all_sgs: List[SubGraph] = []
    for off in start_offsets:
        seq = order[off % m:] + order[: off % m]
        groups: List[List[int]] = []
        i = 0
        while i < m:
            group = [seq[i]]
            ng = sizes[seq[i]]
            i += 1
            while i < m:
                gap = abs(n_target - ng)
                if gap < epsilon:
                    break
                nxt = sizes[seq[i]]
                if abs(n_target - (ng + nxt)) >= gap:
                    break
                group.append(seq[i])
                ng += nxt
                i += 1
            groups.append(group)
        # fold a small leftover tail into the previous sub-graph
        if len(groups) >= 2 and sum(sizes[t] for t in groups[-1]) < n_target / 2:
            groups[-2].extend(groups.pop())
        all_sgs += [make_subgraph(instance, solution, g, centers=centers)
                    for g in groups]
    return _dedup(all_sgs)


def ruin(instance: Instance, solution: Solution, g: SubGraph) -> RuinedSubGraph:
    """Drop all edges of the sub-graph: return it as an independent CVRP with
    the summed length of the removed tours as prior cost."""
    for t in g.tour_indices:
        if t >= len(solution.tours):
            raise StalenessError(f"tour index {t} out of range")
    nodes = sorted(i for t in g.tour_indices for i in solution.tours[t])
    if tuple(nodes) != g.nodes:
        raise StalenessError("sub-graph nodes no longer match the solution's tours")
    prior = sum(tour_length(instance, solution.tours[t]) for t in g.tour_indices)
    sub = Instance(
        name=f"{instance.name}/sg{hash(g.key) & 0xFFFF:04x}",
        depot=instance.depot,
        customers=instance.customers[[i - 1 for i in nodes]],
        demands=instance.demands[[i - 1 for i in nodes]],
        capacity=instance.capacity,
        rounding=instance.rounding,
    )
    return RuinedSubGraph(
        sub_instance=sub,
        global_nodes=tuple(nodes),
        prior_cost=float(prior),
        subgraph=g,
    )


def insert(
    instance: Instance,
    solution: Solution,
    rsg: RuinedSubGraph,
    sg_solution: Solution,
) -> Solution:
    """Splice a recreated sub-solution back into the global solution."""
    n_local = len(rsg.global_nodes)
    covered = sorted(i for t in sg_solution.tours for i in t)
    if covered != list(range(1, n_local + 1)):
        raise CoverageError("sub-solution does not cover the sub-graph node set exactly")
    removed = set(rsg.subgraph.tour_indices)
    tours = [list(t) for ti, t in enumerate(solution.tours) if ti not in removed]
    for t in sg_solution.tours:
        tours.append([rsg.global_nodes[i - 1] for i in t])
    cost = solution.cost - rsg.prior_cost + sg_solution.cost
    return Solution(tours=tours, cost=float(cost))


def insert_many(
    instance: Instance,
    solution: Solution,
    updates: Sequence[Tuple[RuinedSubGraph, Solution]],
) -> Solution:
    """Splice several tour-disjoint sub-solutions back in one step. The
    sub-graphs must reference disjoint tour sets of `solution`; the resulting
    cost is order-independent."""
    removed: set = set()
    for rsg, _ in updates:
        if removed & set(rsg.subgraph.tour_indices):
            raise CoverageError("sub-graphs are not tour-disjoint")
        removed.update(rsg.subgraph.tour_indices)
    tours = [list(t) for ti, t in enumerate(solution.tours) if ti not in removed]
    cost = solution.cost
    for rsg, sub in updates:
        n_local = len(rsg.global_nodes)
        covered = sorted(i for t in sub.tours for i in t)
        if covered != list(range(1, n_local + 1)):
            raise CoverageError("sub-solution does not cover its node set exactly")
        for t in sub.tours:
            tours.append([rsg.global_nodes[i - 1] for i in t])
        cost += sub.cost - rsg.prior_cost
    return Solution(tours=tours, cost=float(cost))
