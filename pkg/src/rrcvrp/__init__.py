"""CVRP ruin-recreate solver toolkit: savings/sweep construction, sub-graph
based ruin-recreate search with scored sub-graph selection, and an anytime
benchmark harness."""

from .core import Instance, Solution, distance, solution_cost, validate
from .dataio import (
    GeneratorConfig,
    TrajectoryRecord,
    generate_instance,
    load_weights,
    parse_vrp,
    save_weights,
    write_vrp,
)
from .search import SearchConfig, nrr, rr

__all__ = [
    "Instance",
    "Solution",
    "distance",
    "solution_cost",
    "validate",
    "GeneratorConfig",
    "TrajectoryRecord",
    "generate_instance",
    "parse_vrp",
    "write_vrp",
    "load_weights",
    "save_weights",
    "SearchConfig",
    "rr",
    "nrr",
]

__version__ = "0.1.0"
