"""Recreate operators: solve a ruined sub-graph as an independent CVRP.

Operators never self-censor: a recreated solution worse than the prior cost
is still returned, the acceptance layer decides what to do with it.
"""

from __future__ import annotations

import json
import select as _select
import subprocess
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import Instance, Solution, validate
from .construct import savings_init
from .subgraph import RuinedSubGraph


class OperatorError(RuntimeError):
    """Recreate operator failed (timeout, malformed or infeasible output)."""


def recreate_savings(rsg: RuinedSubGraph) -> Solution:
    """Clarke-Wright on the sub-instance; deterministic."""
    return savings_init(rsg.sub_instance)


def recreate_insertion(
    rsg: RuinedSubGraph,
    rng: np.random.Generator,
    restarts: int = 24,
) -> Solution:
    """Best insertion from scratch with randomized node orderings; returns the
    cheapest of `restarts` runs. Restart 0 uses the deterministic
    farthest-first ordering so a single restart is rng-independent; further
    restarts randomize by jittering each node's depot distance (pure uniform
    permutations are almost never competitive with farthest-first, so the
    jitter keeps the restarts in the useful part of the ordering space).

    All restarts advance in lockstep so the edge scan is batched across them;
    this is the innermost loop of the whole search."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    inst = rsg.sub_instance
    n = inst.n
    d0 = inst.distance_matrix[0]
    orders = [sorted(range(1, n + 1), key=lambda i: (-d0[i], i))]
    for _ in range(restarts - 1):
        priority = -d0[1:] * rng.uniform(0.5, 1.5, n)
        orders.append([int(i) + 1 for i in np.argsort(priority, kind="stable")])
    tours = _batched_insertion(inst, np.asarray(orders, dtype=np.intp))
    return Solution.from_tours(inst, tours)


def _batched_insertion(inst: Instance, orders: np.ndarray) -> List[List[int]]:
    """Run one cheapest-insertion pass per row of `orders` simultaneously and
    return the tour list of the cheapest run.

    State per run is a flat depot-closed edge list (a, b, tour, length); a
    slot with length -inf is unused, which turns its detour cost into +inf
    and keeps it out of every argmin."""
    R, n = orders.shape
    dm = inst.distance_matrix
    q = inst.demands
    cap = inst.capacity
    rows = np.arange(R)
    cap_e = 2 * n  # worst case: every node opens a singleton tour
    ea = np.zeros((R, cap_e), dtype=np.intp)
    eb = np.zeros((R, cap_e), dtype=np.intp)
    et = np.zeros((R, cap_e), dtype=np.intp)
    dab = np.full((R, cap_e), -np.inf)
    loads = np.zeros((R, n))
    ne = np.zeros(R, dtype=np.intp)  # used edge slots per run
    nt = np.zeros(R, dtype=np.intp)  # open tours per run

    for s in range(n):
        nodes = orders[:, s]
        dq = q[nodes - 1]
        dmn = dm[nodes]  # (R, n+1); the matrix is symmetric
        d = np.take_along_axis(dmn, ea, 1) + np.take_along_axis(dmn, eb, 1) - dab
        d[np.take_along_axis(loads, et, 1) + dq[:, None] > cap] = np.inf
        best = d.argmin(axis=1)
        # a new tour only if out-and-back is strictly cheaper than every
        # feasible detour of that run
        ins = d[rows, best] <= 2.0 * dmn[:, 0]

        ir = rows[ins]
        if ir.size:
            pos = best[ins]
            node = nodes[ins]
            ti = et[ir, pos]
            b_old = eb[ir, pos]
            # split edge (a, b) into (a, node), (node, b)
            eb[ir, pos] = node
            dab[ir, pos] = dm[ea[ir, pos], node]
            slot = ne[ir]
            ea[ir, slot] = node
            eb[ir, slot] = b_old
            et[ir, slot] = ti
            dab[ir, slot] = dm[node, b_old]
            loads[ir, ti] += dq[ins]
            ne[ir] += 1

        nr = rows[~ins]
        if nr.size:
            node = nodes[~ins]
            ti = nt[nr]
            slot = ne[nr]
            out_back = dmn[~ins, 0]
            ea[nr, slot], eb[nr, slot], et[nr, slot] = 0, node, ti
            ea[nr, slot + 1], eb[nr, slot + 1], et[nr, slot + 1] = node, 0, ti
            dab[nr, slot] = out_back
            dab[nr, slot + 1] = out_back
            loads[nr, ti] = dq[~ins]
            ne[nr] += 2
            nt[nr] += 1

    costs = np.where(np.isfinite(dab), dab, 0.0).sum(axis=1)
    r = int(np.argmin(costs))  # ties: earliest restart, like a sequential scan
    succ: List[dict] = [dict() for _ in range(int(nt[r]))]
    for j in range(int(ne[r])):
        succ[int(et[r, j])][int(ea[r, j])] = int(eb[r, j])
    tours = []
    for t in range(int(nt[r])):
        tour, cur = [], succ[t][0]
        while cur != 0:
            tour.append(cur)
            cur = succ[t][cur]
        tours.append(tour)
    return tours


@dataclass
class ExternalConfig:
    """Child-process adapter settings. The command must speak the
    newline-delimited JSON protocol: one request line in, one response out."""

    command: List[str]
    timeout: Optional[float] = None  # None: the search layer fills in budget/50
    samples: int = 1024


class ExternalSolver:
    """Adapter around an external recreate solver child process.

    Wire format per sub-graph:
      request : {"nodes": [[x, y, q], ...], "depot": [x, y],
                 "capacity": Q, "samples": int}
      response: {"tours": [[local 0-based index, ...], ...]}
    """

    def __init__(self, config: ExternalConfig):
        self.config = config
        self._proc: Optional[subprocess.Popen] = None

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.config.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.terminate()
            self._proc.wait(timeout=5)
        self._proc = None

    def _read_line(self, proc: subprocess.Popen) -> str:
        timeout = self.config.timeout if self.config.timeout is not None else 10.0
        ready, _, _ = _select.select([proc.stdout], [], [], timeout)
        if not ready:
            self.close()
            raise OperatorError(f"external solver exceeded {timeout}s deadline")
        line = proc.stdout.readline()
        if not line:
            self.close()
            raise OperatorError("external solver closed its output stream")
        return line

    def recreate(self, rsg: RuinedSubGraph) -> Solution:
        inst = rsg.sub_instance
        request = {
            "nodes": [
                [float(x), float(y), float(q)]
                for (x, y), q in zip(inst.customers, inst.demands)
            ],
            "depot": [float(inst.depot[0]), float(inst.depot[1])],
            "capacity": float(inst.capacity),
            "samples": self.config.samples,
        }
        proc = self._ensure_proc()
        try:
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.close()
            raise OperatorError(f"external solver pipe failed: {exc}") from exc
        line = self._read_line(proc)
        try:
            response = json.loads(line)
            tours = [[int(i) + 1 for i in t] for t in response["tours"]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise OperatorError(f"malformed external response: {exc}") from exc
        sol = Solution.from_tours(inst, tours)
        problems = validate(inst, sol)
        if problems:
            raise OperatorError(f"infeasible external solution: {problems[:3]}")
        return sol


def recreate_external(rsg: RuinedSubGraph, config: ExternalConfig) -> Solution:
    """One-shot convenience wrapper; long-running callers should hold an
    ExternalSolver to keep the child process alive."""
    solver = ExternalSolver(config)
    try:
        return solver.recreate(rsg)
    finally:
        solver.close()
