"""Instance parsing/writing, instance generation, and artifact serialization.

Covers the TSPLIB/CVRPLIB VRP file format, the mixed uniform/clustered
instance generator, trajectory CSVs, solution text files and the scoring
model weights document.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import Instance


class ParseError(ValueError):
    """Malformed instance/artifact file."""


class FormatError(ValueError):
    """Malformed weights document."""


# ---------------------------------------------------------------------------
# TSPLIB / CVRPLIB VRP files
# ---------------------------------------------------------------------------

_REQUIRED_KEYS = ("NAME", "DIMENSION", "CAPACITY", "EDGE_WEIGHT_TYPE")


def parse_vrp(text: str) -> Instance:
    """Parse a CVRPLIB-style .vrp file into an Instance.

    Supports EUC_2D instances with NODE_COORD_SECTION, DEMAND_SECTION and
    DEPOT_SECTION. The depot's demand must be zero and is dropped.
    """
    keys: Dict[str, str] = {}
    coords: Dict[int, Tuple[float, float]] = {}
    demands: Dict[int, float] = {}
    depot_ids: List[int] = []

    lines = text.splitlines()
    section = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper == "EOF":
            break
        if upper.startswith("NODE_COORD_SECTION"):
            section = "coord"
            continue
        if upper.startswith("DEMAND_SECTION"):
            section = "demand"
            continue
        if upper.startswith("DEPOT_SECTION"):
            section = "depot"
            continue
        if section is None or (":" in line and not line.split()[0].isdigit()):
            if ":" not in line:
                raise ParseError(f"line {lineno}: expected 'KEY : value', got {line!r}")
            key, value = line.split(":", 1)
            keys[key.strip().upper()] = value.strip()
            section = None
            continue
        parts = line.split()
        try:
            if section == "coord":
                coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
            elif section == "demand":
                demands[int(parts[0])] = float(parts[1])
            elif section == "depot":
                node = int(parts[0])
                if node != -1:
                    depot_ids.append(node)
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc

    for key in _REQUIRED_KEYS:
        if key not in keys:
            raise ParseError(f"missing required key {key}")
    if not coords:
        raise ParseError("missing NODE_COORD_SECTION")
    if not demands:
        raise ParseError("missing DEMAND_SECTION")
    if not depot_ids:
        raise ParseError("missing DEPOT_SECTION")

    ewt = keys["EDGE_WEIGHT_TYPE"].upper()
    if ewt != "EUC_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt!r}")
    # EUC_2D means integer-rounded distances per the TSPLIB convention;
    # files we generate carry their rounding mode in the COMMENT field.
    rounding = "round"
    comment = keys.get("COMMENT", "")
    if "rounding=none" in comment:
        rounding = "none"
    elif "rounding=round" in comment:
        rounding = "round"

    dim = int(keys["DIMENSION"])
    if len(coords) != dim or len(demands) != dim:
        raise ParseError(
            f"DIMENSION {dim} does not match section sizes "
            f"(coords {len(coords)}, demands {len(demands)})"
        )
    depot_id = depot_ids[0]
    if depot_id not in coords:
        raise ParseError(f"depot id {depot_id} has no coordinates")
    if demands.get(depot_id, 0.0) != 0.0:
        raise ParseError(f"depot {depot_id} has nonzero demand")

    customer_ids = sorted(i for i in coords if i != depot_id)
    return Instance(
        name=keys["NAME"],
        depot=coords[depot_id],
        customers=np.array([coords[i] for i in customer_ids]),
        demands=np.array([demands[i] for i in customer_ids]),
        capacity=float(keys["CAPACITY"]),
        rounding=rounding,
    )


def write_vrp(instance: Instance) -> str:
    """Serialize an Instance in CVRPLIB syntax (depot is node 1)."""
    out = [
        f"NAME : {instance.name}",
        f"COMMENT : rounding={instance.rounding}",
        "TYPE : CVRP",
        f"DIMENSION : {instance.n + 1}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {_fmt_num(instance.capacity)}",
        "NODE_COORD_SECTION",
        f"1 {instance.depot[0]!r} {instance.depot[1]!r}",
    ]
    for i, (x, y) in enumerate(instance.customers, start=2):
        out.append(f"{i} {float(x)!r} {float(y)!r}")
    out.append("DEMAND_SECTION")
    out.append("1 0")
    for i, q in enumerate(instance.demands, start=2):
        out.append(f"{i} {_fmt_num(q)}")
    out += ["DEPOT_SECTION", "1", "-1", "EOF", ""]
    return "\n".join(out)


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


# ---------------------------------------------------------------------------
# Instance generation (mixed uniform / clustered)
# ---------------------------------------------------------------------------

@dataclass
class GeneratorConfig:
    n: int
    capacity: float = 50.0
    cluster_count_range: Tuple[int, int] = (1, 10)
    cluster_cov_range: Tuple[float, float] = (0.05, 0.1)
    demand_range: Tuple[int, int] = (1, 9)
    uniform_fraction_beta: Tuple[float, float] = (0.5, 9.0)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")


def generate_instance(config: GeneratorConfig, return_info: bool = False):
    """Draw one instance: a Beta-distributed fraction of points uniform on the
    unit square, the rest from a Gaussian mixture rescaled into the square.
    Deterministic for a fixed seed."""
    rng = np.random.default_rng(config.seed)
    lo_k, hi_k = config.cluster_count_range
    k = int(rng.integers(lo_k, hi_k + 1))
    means = rng.standard_normal((k, 2))
    covs = rng.uniform(*config.cluster_cov_range, size=(k, 2))
    p_uniform = float(rng.beta(*config.uniform_fraction_beta))

    n = config.n
    n_unif = int(round(p_uniform * n))
    n_clust = n - n_unif

    points = np.empty((0, 2))
    if n_clust > 0:
        comp = rng.integers(0, k, size=n_clust)
        pts = means[comp] + rng.standard_normal((n_clust, 2)) * np.sqrt(covs[comp])
        # min-max rescale the mixture draw into the unit square, per axis
        lo = pts.min(axis=0)
        span = pts.max(axis=0) - lo
        span[span == 0.0] = 1.0
        pts = (pts - lo) / span
        points = pts
    if n_unif > 0:
        points = np.vstack([points, rng.uniform(0.0, 1.0, size=(n_unif, 2))])
    points = points[rng.permutation(n)]

    lo_d, hi_d = config.demand_range
    demands = rng.integers(lo_d, hi_d + 1, size=n).astype(float)
    depot = tuple(rng.uniform(0.0, 1.0, size=2))

    inst = Instance(
        name=f"gen_n{n}_seed{config.seed}",
        depot=depot,
        customers=points,
        demands=demands,
        capacity=float(config.capacity),
        rounding="none",
    )
    if return_info:
        return inst, {"clusters": k, "uniform_fraction": p_uniform}
    return inst


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """Piecewise-constant best-so-far cost curve. Improvements are encoded as
    two points at the same timestamp (old value, new value)."""

    points: List[Tuple[float, float]] = field(default_factory=list)
    metadata: Dict[str, object] = field(default_factory=dict)

    def add(self, t: float, cost: float):
        if self.points:
            last_t, last_c = self.points[-1]
            if t < last_t:
                raise ValueError("timestamps must be nondecreasing")
            if cost != last_c and t > last_t:
                # step encoding: hold the old value up to t, then drop
                self.points.append((t, last_c))
        self.points.append((t, cost))

    def best_cost(self) -> Optional[float]:
        return self.points[-1][1] if self.points else None


def write_trajectory(record: TrajectoryRecord) -> str:
    rows = ["t,best_cost"]
    rows += [f"{t!r},{c!r}" for t, c in record.points]
    return "\n".join(rows) + "\n"


def read_trajectory(text: str) -> TrajectoryRecord:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "t,best_cost":
        raise ParseError("trajectory CSV must start with 't,best_cost'")
    points = []
    for ln in lines[1:]:
        t, c = ln.split(",")
        points.append((float(t), float(c)))
    return TrajectoryRecord(points=points)


# ---------------------------------------------------------------------------
# Solution text format: one tour per line, 1-based customer indices
# ---------------------------------------------------------------------------

def write_solution(tours: List[List[int]]) -> str:
    return "\n".join(" ".join(str(i) for i in t) for t in tours) + "\n"


def read_solution(text: str) -> List[List[int]]:
    return [
        [int(tok) for tok in ln.split()]
        for ln in text.splitlines()
        if ln.strip()
    ]


# ---------------------------------------------------------------------------
# Scoring model weights document
# ---------------------------------------------------------------------------

WEIGHTS_SCHEMA_VERSION = 1
_KNOWN_ACTIVATIONS = ("relu",)
_KNOWN_POOLINGS = ("sum", "std", "max", "mean")


def save_weights(model) -> str:
    """Serialize a ScoringModel to a self-describing JSON document. Arrays are
    row-major float32, base64-encoded for a bit-exact round-trip."""
    layers = {}
    for name, arr in model.params.items():
        a = np.ascontiguousarray(arr, dtype=np.float32)
        layers[name] = {
            "shape": list(a.shape),
            "data": base64.b64encode(a.tobytes()).decode("ascii"),
        }
    doc = {
        "schema_version": WEIGHTS_SCHEMA_VERSION,
        "architecture": model.arch,
        "feature_norm": model.feature_norm,
        "layers": layers,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def load_weights(text: str):
    from .scoring import ScoringModel

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"weights document is not valid JSON: {exc}") from exc
    if doc.get("schema_version") != WEIGHTS_SCHEMA_VERSION:
        raise FormatError(f"unknown schema version {doc.get('schema_version')!r}")
    arch = doc["architecture"]
    if arch.get("activation") not in _KNOWN_ACTIVATIONS:
        raise FormatError(f"unknown activation {arch.get('activation')!r}")
    for pool in list(arch.get("node_pooling", [])) + list(arch.get("sg_pooling", [])):
        if pool not in _KNOWN_POOLINGS:
            raise FormatError(f"unknown pooling {pool!r}")
    params = {}
    for name, entry in doc["layers"].items():
        shape = tuple(entry["shape"])
        raw = base64.b64decode(entry["data"])
        arr = np.frombuffer(raw, dtype=np.float32)
        if int(np.prod(shape)) != arr.size:
            raise FormatError(f"layer {name}: data length does not match shape {shape}")
        params[name] = arr.reshape(shape).copy()
    return ScoringModel(arch=arch, params=params, feature_norm=doc["feature_norm"])
