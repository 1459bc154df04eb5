"""CVRP problem and solution data model.

Node indexing convention used across the package: 0 is the depot,
customers are 1..N. Tours store customer indices only; the depot is
implicit at both ends of every tour.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Sequence

import numpy as np


class IndexError_(IndexError):
    """Raised for out-of-range node indices."""


@dataclass(frozen=True, eq=False)
class Instance:
    """A CVRP instance: one depot, N customers, homogeneous capacity Q."""

    name: str
    depot: tuple
    customers: np.ndarray  # (N, 2) float64
    demands: np.ndarray    # (N,) float64, 0 < q_n <= Q
    capacity: float
    rounding: str = "none"  # "none" | "round" (TSPLIB nearest-integer)

    def __post_init__(self):
        object.__setattr__(self, "customers", np.asarray(self.customers, dtype=float))
        object.__setattr__(self, "demands", np.asarray(self.demands, dtype=float))
        object.__setattr__(self, "depot", (float(self.depot[0]), float(self.depot[1])))
        if self.n < 1:
            raise ValueError("instance needs at least one customer")
        if self.customers.shape != (self.n, 2):
            raise ValueError("customers must be an (N, 2) array")
        if not np.all(np.isfinite(self.customers)) or not np.isfinite(self.depot).all():
            raise ValueError("coordinates must be finite")
        if np.any(self.demands <= 0) or np.any(self.demands > self.capacity):
            raise ValueError("demands must satisfy 0 < q_n <= Q")
        if self.rounding not in ("none", "round"):
            raise ValueError(f"unknown rounding mode {self.rounding!r}")

    @property
    def n(self) -> int:
        return len(self.demands)

    @cached_property
    def coords(self) -> np.ndarray:
        """(N+1, 2) coordinate array with the depot at row 0."""
        return np.vstack([np.asarray(self.depot)[None, :], self.customers])

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        d = self.coords
        diff = d[:, None, :] - d[None, :, :]
        m = np.sqrt((diff * diff).sum(axis=2))
        if self.rounding == "round":
            m = np.floor(m + 0.5)
        return m

    def demand(self, i: int) -> float:
        if not 1 <= i <= self.n:
            raise IndexError_(f"invalid customer index {i}")
        return float(self.demands[i - 1])

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.depot == other.depot
            and self.capacity == other.capacity
            and self.rounding == other.rounding
            and np.array_equal(self.customers, other.customers)
            and np.array_equal(self.demands, other.demands)
        )


def distance(instance: Instance, i: int, j: int) -> float:
    """Euclidean distance between nodes i and j (0 = depot)."""
    n = instance.n
    if not (0 <= i <= n and 0 <= j <= n):
        raise IndexError_(f"invalid node index pair ({i}, {j})")
    return float(instance.distance_matrix[i, j])


def tour_length(instance: Instance, nodes: Sequence[int]) -> float:
    """Length of the closed tour depot -> nodes... -> depot."""
    dm = instance.distance_matrix
    if len(nodes) == 0:
        return 0.0
    total = dm[0, nodes[0]] + dm[nodes[-1], 0]
    for a, b in zip(nodes[:-1], nodes[1:]):
        total += dm[a, b]
    return float(total)


def tour_load(instance: Instance, nodes: Iterable[int]) -> float:
    return float(sum(instance.demands[i - 1] for i in nodes))


@dataclass
class Solution:
    """A set of tours partitioning the customers, with cached total cost.

    The cached cost is refreshed by every mutation path in this package;
    `solution_cost` recomputes it from scratch as the audit path.
    """

    tours: List[List[int]]
    cost: float = field(default=0.0)

    @classmethod
    def from_tours(cls, instance: Instance, tours: Iterable[Iterable[int]]) -> "Solution":
        tours = [list(t) for t in tours]
        sol = cls(tours=tours, cost=0.0)
        sol.cost = solution_cost(instance, sol)
        return sol

    def copy(self) -> "Solution":
        return Solution(tours=[list(t) for t in self.tours], cost=self.cost)

    def customers(self) -> List[int]:
        return [i for t in self.tours for i in t]


def solution_cost(instance: Instance, solution: Solution) -> float:
    """Total length of all closed tours; invariant under tour order/direction."""
    n = instance.n
    for t in solution.tours:
        for i in t:
            if not 1 <= i <= n:
                raise IndexError_(f"invalid customer index {i}")
    return float(sum(tour_length(instance, t) for t in solution.tours))


def validate(instance: Instance, solution: Solution) -> List[str]:
    """Feasibility report: empty list iff the solution is a capacity-feasible
    partition of the customers. Violations are data, not exceptions."""
    violations = []
    seen = np.zeros(instance.n + 1, dtype=int)
    for ti, tour in enumerate(solution.tours):
        if len(tour) == 0:
            violations.append(f"tour {ti}: empty")
            continue
        load = 0.0
        for i in tour:
            if not 1 <= i <= instance.n:
                violations.append(f"tour {ti}: invalid index {i}")
                continue
            seen[i] += 1
            load += instance.demands[i - 1]
        if load > instance.capacity + 1e-9:
            violations.append(
                f"tour {ti}: load {load} exceeds capacity {instance.capacity}"
            )
    for i in range(1, instance.n + 1):
        if seen[i] == 0:
            violations.append(f"customer {i}: missing")
        elif seen[i] > 1:
            violations.append(f"customer {i}: served {seen[i]} times")
    return violations
