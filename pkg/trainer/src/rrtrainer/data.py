"""Scored sub-graph corpus loading and feature construction.

The corpus is the JSON document emitted by `rrcvrp score-data`:

    {"schema_version": 1,
     "instances": {name: {"depot": [x, y], "capacity": Q,
                          "nodes": [[x, y, q], ...]}},
     "samples": [{"instance": name, "nodes": [global 1-based ids],
                  "target": improvement ratio}, ...]}

Feature conventions are pinned by the weights document and must match the
consumer exactly: node order is depot first then customers by ascending
global index, per-node features are [x, y, q / Q], and the neighborhood of
each node is its K nearest nodes by Euclidean distance with ties broken by
row index (stable argsort).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent corpus."""


SCHEMA_VERSION = 1


@dataclass
class InstanceData:
    name: str
    depot: np.ndarray       # (2,)
    capacity: float
    nodes: np.ndarray       # (N, 3) columns x, y, q


@dataclass
class Sample:
    instance: str
    nodes: Tuple[int, ...]  # global 1-based customer ids, ascending
    target: float


@dataclass
class Corpus:
    instances: Dict[str, InstanceData]
    samples: List[Sample]


def load_corpus(text: str) -> Corpus:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"corpus is not valid JSON: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"unknown schema version {doc.get('schema_version')!r}")
    instances = {}
    for name, entry in doc["instances"].items():
        nodes = np.asarray(entry["nodes"], dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise DataError(f"instance {name}: nodes must be rows of [x, y, q]")
        instances[name] = InstanceData(
            name=name,
            depot=np.asarray(entry["depot"], dtype=np.float64),
            capacity=float(entry["capacity"]),
            nodes=nodes,
        )
    samples = []
    for i, s in enumerate(doc["samples"]):
        name = s["instance"]
        if name not in instances:
            raise DataError(f"sample {i} references unknown instance {name!r}")
        ids = tuple(sorted(int(v) for v in s["nodes"]))
        n = instances[name].nodes.shape[0]
        if not ids or ids[0] < 1 or ids[-1] > n:
            raise DataError(f"sample {i}: node ids out of range 1..{n}")
        samples.append(Sample(instance=name, nodes=ids, target=float(s["target"])))
    if not samples:
        raise DataError("corpus has no samples")
    return Corpus(instances=instances, samples=samples)


def build_features(
    inst: InstanceData,
    nodes: Optional[Sequence[int]] = None,
    knn: int = 25,
    feature_norm: Optional[dict] = None,
):
    """Returns (x, nbr_idx, nbr_w) for the depot plus the given customers
    (all of them when nodes is None), in canonical order."""
    if nodes is None:
        idx = np.arange(inst.nodes.shape[0])
    else:
        idx = np.asarray(sorted(nodes)) - 1
    coords = np.vstack([inst.depot[None, :], inst.nodes[idx, :2]])
    q = np.concatenate([[0.0], inst.nodes[idx, 2]])
    x = np.column_stack([coords, q / inst.capacity])
    if feature_norm is not None:
        x = (x - np.asarray(feature_norm["offset"])) / np.asarray(feature_norm["scale"])

    m1 = coords.shape[0]
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    k = min(knn, m1 - 1)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    w = np.take_along_axis(dist, order, axis=1)
    return x, order, w


def split_by_instance(
    corpus: Corpus, val_fraction: float, seed: int
) -> Tuple[List[Sample], List[Sample]]:
    """Hold out whole instances for validation so near-duplicate sub-graphs
    from one instance never straddle the split."""
    names = sorted(corpus.instances)
    rng = np.random.default_rng(seed)
    rng.shuffle(names)
    n_val = max(1, int(round(val_fraction * len(names))))
    if n_val >= len(names):
        raise DataError("validation split leaves no training instances")
    val_names = set(names[:n_val])
    train = [s for s in corpus.samples if s.instance not in val_names]
    val = [s for s in corpus.samples if s.instance in val_names]
    if not train or not val:
        raise DataError("validation split produced an empty side")
    return train, val
