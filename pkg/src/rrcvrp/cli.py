"""Command-line front end: solve / bench / gen / score-data / ausc."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import bench as bench_mod
from . import dataio
from .construct import savings_init, sweep_init
from .core import validate
from .recreate import ExternalConfig, recreate_insertion, recreate_savings
from .scoring import HeuristicScorer, NeuralScorer
from .search import SearchConfig, nrr, rr
from .subgraph import (
    construct_add_nn,
    construct_knn,
    construct_pairs,
    construct_sweep,
    ruin,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _load_instance(path: str):
    with open(path) as fh:
        return dataio.parse_vrp(fh.read())


def _write_manifest(path: str, args: argparse.Namespace):
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    with open(path, "w") as fh:
        json.dump(resolved, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")


def _search_config(args: argparse.Namespace) -> SearchConfig:
    external = None
    if args.recreate == "external":
        if not args.external_cmd:
            raise SystemExit("--recreate external requires --external-cmd")
        external = ExternalConfig(command=args.external_cmd.split(),
                                  samples=args.samples)
    return SearchConfig(
        init=args.init,
        construct=args.construct,
        select=args.select,
        n_mult=args.n_mult,
        recreate=args.recreate,
        recreate_restarts=args.recreate_restarts,
        external=external,
        accept=args.accept,
        budget_seconds=args.time_budget,
        n_target=args.n_target,
        knn_tours=args.knn_tours,
        pair_neighbors=args.pair_neighbors,
        sweep_restarts=args.sweep_restarts,
        seed=args.seed,
        max_iters=args.max_iters,
    )


def cmd_solve(args) -> int:
    instance = _load_instance(args.instance)
    out = args.out or os.path.splitext(args.instance)[0]
    if args.method in ("savings", "sweep"):
        sol = savings_init(instance) if args.method == "savings" else sweep_init(instance)
        traj = dataio.TrajectoryRecord(metadata={"method": args.method})
        traj.add(0.0, sol.cost)
    elif args.method == "rr":
        sol, traj = rr(instance, _search_config(args))
    else:
        if args.weights:
            with open(args.weights) as fh:
                scorer = NeuralScorer(dataio.load_weights(fh.read()))
        else:
            print("warning: no --weights given, falling back to the heuristic scorer",
                  file=sys.stderr)
            scorer = HeuristicScorer()
        sol, traj = nrr(instance, _search_config(args), scorer)

    problems = validate(instance, sol)
    if problems:
        print(f"internal error: infeasible solution: {problems[:5]}", file=sys.stderr)
        return EXIT_FAILURE
    with open(out + ".sol", "w") as fh:
        fh.write(dataio.write_solution(sol.tours))
    with open(out + ".traj.csv", "w") as fh:
        fh.write(dataio.write_trajectory(traj))
    _write_manifest(out + ".manifest.json", args)
    print(f"{instance.name}: cost {sol.cost:.4f} with {len(sol.tours)} tours "
          f"({args.method})")
    return EXIT_OK


def cmd_gen(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    for i in range(args.count):
        cfg = dataio.GeneratorConfig(n=args.n, capacity=args.capacity,
                                     seed=args.seed + i)
        inst = dataio.generate_instance(cfg)
        path = os.path.join(args.out_dir, f"{inst.name}.vrp")
        with open(path, "w") as fh:
            fh.write(dataio.write_vrp(inst))
        print(path)
    _write_manifest(os.path.join(args.out_dir, "gen.manifest.json"), args)
    return EXIT_OK


def cmd_bench(args) -> int:
    instances = [_load_instance(p) for p in args.instances]
    methods = []
    for name in args.methods.split(","):
        cfg = SearchConfig(budget_seconds=args.time_budget,
                           n_target=args.n_target,
                           max_iters=args.max_iters)
        methods.append((name.strip(), cfg))
    plan = bench_mod.BenchPlan(
        instances=instances,
        methods=methods,
        seeds=list(range(args.seeds)),
    )
    if args.time_budget:
        plan.budgets = {}  # explicit budget overrides the size-keyed defaults
    report = bench_mod.run_bench(plan)
    paths = bench_mod.emit_artifacts(report, args.out_dir)
    _write_manifest(os.path.join(args.out_dir, "bench.manifest.json"), args)
    for method, (mean, std) in sorted(report.aggregates().items()):
        print(f"{method}: mean {mean:.4f} std {std:.4f}")
    print(f"{len(paths)} artifact files in {args.out_dir}")
    return EXIT_OK


def cmd_score_data(args) -> int:
    """Produce a scored sub-graph corpus: run init + SG construction on each
    instance, recreate every sub-graph and record the relative improvement."""
    rng = np.random.default_rng(args.seed)
    instances = {}
    samples = []
    for path in args.instances:
        inst = _load_instance(path)
        instances[inst.name] = {
            "depot": [inst.depot[0], inst.depot[1]],
            "capacity": inst.capacity,
            "nodes": [
                [float(x), float(y), float(q)]
                for (x, y), q in zip(inst.customers, inst.demands)
            ],
        }
        sol = savings_init(inst) if args.init == "savings" else sweep_init(inst)
        if args.construct == "sweep":
            sgs = construct_sweep(inst, sol, args.n_target, restarts=args.restarts)
        elif args.construct == "knn":
            sgs = construct_knn(inst, sol, args.knn_tours)
        elif args.construct == "pairs":
            sgs = construct_pairs(inst, sol, args.knn_tours)
        else:
            sgs = construct_add_nn(inst, sol, args.n_target)
        for g in sgs:
            rsg = ruin(inst, sol, g)
            if args.recreate == "savings":
                sub = recreate_savings(rsg)
            else:
                sub = recreate_insertion(rsg, rng, args.recreate_restarts)
            target = (rsg.prior_cost - sub.cost) / rsg.prior_cost
            samples.append({
                "instance": inst.name,
                "nodes": list(g.nodes),
                "target": target,
            })
    doc = {"schema_version": 1, "instances": instances, "samples": samples}
    with open(args.out, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    _write_manifest(args.out + ".manifest.json", args)
    print(f"{len(samples)} scored sub-graphs -> {args.out}")
    return EXIT_OK


def cmd_ausc(args) -> int:
    with open(args.trajectory) as fh:
        record = dataio.read_trajectory(fh.read())
    value = bench_mod.ausc(record, args.savings_cost, args.budget)
    print(f"{value!r}")
    return EXIT_OK


def _add_search_flags(p: argparse.ArgumentParser):
    p.add_argument("--init", choices=["savings", "sweep"], default="savings")
    p.add_argument("--construct", choices=["pairs", "knn", "sweep", "add_nn"],
                   default="pairs")
    p.add_argument("--select", choices=["greedy", "sample", "disjoint"],
                   default="disjoint")
    p.add_argument("--n-mult", type=int, default=16, dest="n_mult")
    p.add_argument("--pair-neighbors", type=int, default=3, dest="pair_neighbors",
                   help="pair partners per tour for --construct pairs")
    p.add_argument("--knn-tours", type=int, default=1, dest="knn_tours",
                   help="neighbor tours per sub-graph for --construct knn")
    p.add_argument("--sweep-restarts", type=int, default=4, dest="sweep_restarts",
                   help="beam restarts per iteration for --construct sweep")
    p.add_argument("--recreate", choices=["savings", "insertion", "external"],
                   default="insertion")
    p.add_argument("--recreate-restarts", type=int, default=24)
    p.add_argument("--external-cmd", default=None,
                   help="command line of an external recreate solver")
    p.add_argument("--samples", type=int, default=1024,
                   help="sample-count forwarded to an external solver")
    p.add_argument("--accept", choices=["sa", "greedy"], default="sa")
    p.add_argument("--time-budget", type=float, default=60.0)
    p.add_argument("--n-target", type=int, default=100, dest="n_target")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrcvrp",
        description="CVRP ruin-recreate solver toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("instance")
    p.add_argument("--method", choices=["nrr", "rr", "savings", "sweep"],
                   default="nrr")
    p.add_argument("--weights", default=None)
    p.add_argument("--out", default=None)
    _add_search_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate instances")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--capacity", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run a benchmark plan")
    p.add_argument("instances", nargs="+")
    p.add_argument("--methods", default="savings,rr,nrr")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--time-budget", type=float, default=60.0)
    p.add_argument("--n-target", type=int, default=100, dest="n_target")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--out-dir", default="bench_out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("score-data", help="emit a scored sub-graph corpus")
    p.add_argument("instances", nargs="+")
    p.add_argument("--init", choices=["savings", "sweep"], default="savings")
    p.add_argument("--construct", choices=["sweep", "knn", "pairs", "add_nn"],
                   default="sweep")
    p.add_argument("--n-target", type=int, default=100, dest="n_target")
    p.add_argument("--restarts", type=int, default=3,
                   help="sweep-construction restarts (more sub-graphs)")
    p.add_argument("--knn-tours", type=int, default=4)
    p.add_argument("--recreate", choices=["savings", "insertion"],
                   default="insertion")
    p.add_argument("--recreate-restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score_data)

    p = sub.add_parser("ausc", help="area-under-savings metric of a trajectory")
    p.add_argument("trajectory")
    p.add_argument("--savings-cost", type=float, required=True)
    p.add_argument("--budget", type=float, required=True)
    p.set_defaults(func=cmd_ausc)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (dataio.ParseError, dataio.FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
