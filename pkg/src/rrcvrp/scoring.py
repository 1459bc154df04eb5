"""Sub-graph scoring: the GNN scoring function, a heuristic fallback score,
the score cache, and the selection strategies (greedy / sample / disjoint).

Forward-pass conventions (mirrored by the external trainer, pinned by the
weights document schema):
  - nodes are ordered canonically: depot first, then customers by ascending
    global index; all math runs in float64 on float32-stored weights
  - per node features [x, y, demand/Q] (depot demand 0), affine-normalized
    by the model's feature_norm offsets/scales
  - graph conv layer: relu(W1 h_i + b1 + W2 (sum_j e_ji h_j) + b2), optional
    layer norm, optional residual; neighborhoods are the K nearest nodes by
    Euclidean distance (ties by index), edge weight = distance
  - context embedding: concat(sum, std) over customer rows after each conv
    layer, summed across layers
  - sub-graph embedding: 3 feed-forward layers on final node embeddings,
    then concat(sum, max) over customer rows
  - decoder on concat(sg, context): hidden relu(+layer norm) layers, linear
    scalar head; dropout is a training-only concern and ignored here
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Instance, Solution, tour_length
from .subgraph import RuinedSubGraph, SubGraph


class ModelError(ValueError):
    """Inconsistent model shapes or inputs."""


DEFAULT_ARCH = {
    "in_dim": 3,
    "embed_dim": 128,
    "conv_layers": 4,
    "sg_layers": 3,
    "decoder_layers": 3,
    "decoder_hidden": 256,
    "activation": "relu",
    "node_pooling": ["sum", "std"],
    "sg_pooling": ["sum", "max"],
    "knn": 25,
    "layer_norm": True,
    "residual": True,
    "dropout": 0.1,
}

DEFAULT_FEATURE_NORM = {"offset": [0.0, 0.0, 0.0], "scale": [1.0, 1.0, 1.0]}


@dataclass
class ScoringModel:
    """Weights + architecture descriptor of the scoring function."""

    arch: dict
    params: Dict[str, np.ndarray]
    feature_norm: dict = field(default_factory=lambda: dict(DEFAULT_FEATURE_NORM))

    def __post_init__(self):
        for name, arr in self.params.items():
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"non-finite weights in {name}")
        for name, shape in expected_param_shapes(self.arch).items():
            if name not in self.params:
                raise ModelError(f"missing parameter {name}")
            if tuple(self.params[name].shape) != shape:
                raise ModelError(
                    f"parameter {name}: shape {self.params[name].shape}, expected {shape}"
                )

    @classmethod
    def random_init(cls, seed: int = 0, arch: Optional[dict] = None) -> "ScoringModel":
        arch = dict(DEFAULT_ARCH, **(arch or {}))
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in expected_param_shapes(arch).items():
            if name.endswith(".b") or name.endswith(".ln.beta"):
                params[name] = np.zeros(shape, dtype=np.float32)
            elif name.endswith(".ln.gamma"):
                params[name] = np.ones(shape, dtype=np.float32)
            else:
                fan_in = shape[0]
                bound = np.sqrt(1.0 / fan_in)
                params[name] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
        return cls(arch=arch, params=params)


def expected_param_shapes(arch: dict) -> Dict[str, Tuple[int, ...]]:
    d = arch["embed_dim"]
    pools = len(arch["node_pooling"])
    shapes: Dict[str, Tuple[int, ...]] = {
        "input.w": (arch["in_dim"], d),
        "input.b": (d,),
    }
    for l in range(arch["conv_layers"]):
        shapes[f"conv{l}.lin1.w"] = (d, d)
        shapes[f"conv{l}.lin1.b"] = (d,)
        shapes[f"conv{l}.lin2.w"] = (d, d)
        shapes[f"conv{l}.lin2.b"] = (d,)
        if arch["layer_norm"]:
            shapes[f"conv{l}.ln.gamma"] = (d,)
            shapes[f"conv{l}.ln.beta"] = (d,)
    for l in range(arch["sg_layers"]):
        shapes[f"sg{l}.w"] = (d, d)
        shapes[f"sg{l}.b"] = (d,)
        if arch["layer_norm"]:
            shapes[f"sg{l}.ln.gamma"] = (d,)
            shapes[f"sg{l}.ln.beta"] = (d,)
    in_dim = len(arch["sg_pooling"]) * d + pools * d  # concat(sg, context)
    h = arch["decoder_hidden"]
    dims = [in_dim] + [h] * (arch["decoder_layers"] - 1) + [1]
    for l in range(arch["decoder_layers"]):
        shapes[f"dec{l}.w"] = (dims[l], dims[l + 1])
        shapes[f"dec{l}.b"] = (dims[l + 1],)
        if arch["layer_norm"] and l < arch["decoder_layers"] - 1:
            shapes[f"dec{l}.ln.gamma"] = (dims[l + 1],)
            shapes[f"dec{l}.ln.beta"] = (dims[l + 1],)
    return shapes


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------

@dataclass
class SgFeatures:
    """Canonical GNN inputs for one sub-graph (or full instance)."""

    nodes: Tuple[int, ...]       # global customer indices, ascending
    x: np.ndarray                # (m+1, 3) features, row 0 = depot
    nbr_idx: np.ndarray          # (m+1, k) neighbor row indices
    nbr_w: np.ndarray            # (m+1, k) edge weights (distances)


def build_features(
    instance: Instance,
    g: Union[SubGraph, RuinedSubGraph, None] = None,
    knn: int = 25,
    feature_norm: Optional[dict] = None,
) -> SgFeatures:
    """Features for the nodes of `g` (or the whole instance when g is None):
    coordinates in the global frame, demand normalized by capacity, and
    K-nearest-neighbor edges over the included nodes plus depot."""
    if g is None:
        nodes: Tuple[int, ...] = tuple(range(1, instance.n + 1))
    elif isinstance(g, RuinedSubGraph):
        nodes = g.global_nodes
    else:
        nodes = g.nodes
    if len(nodes) == 0:
        raise ModelError("cannot build features for an empty sub-graph")
    nodes = tuple(sorted(nodes))

    coords = np.vstack([
        np.asarray(instance.depot)[None, :],
        instance.customers[[i - 1 for i in nodes]],
    ])
    q = np.concatenate([[0.0], instance.demands[[i - 1 for i in nodes]]])
    x = np.column_stack([coords, q / instance.capacity])
    norm = feature_norm or DEFAULT_FEATURE_NORM
    x = (x - np.asarray(norm["offset"])) / np.asarray(norm["scale"])

    m1 = len(nodes) + 1
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    k = min(knn, m1 - 1)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    w = np.take_along_axis(dist, order, axis=1)
    return SgFeatures(nodes=nodes, x=x, nbr_idx=order, nbr_w=w)


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------

def _layer_norm(h: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    mu = h.mean(axis=-1, keepdims=True)
    var = h.var(axis=-1, keepdims=True)
    return gamma * (h - mu) / np.sqrt(var + 1e-5) + beta


def _pool(h: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sum":
        return h.sum(axis=0)
    if kind == "std":
        return h.std(axis=0)
    if kind == "max":
        return h.max(axis=0)
    if kind == "mean":
        return h.mean(axis=0)
    raise ModelError(f"unknown pooling {kind!r}")


def _p(model: ScoringModel, name: str) -> np.ndarray:
    return model.params[name].astype(np.float64)


def node_encoder(model: ScoringModel, feats: SgFeatures):
    """Run the graph-conv stack; returns (final node embeddings, per-layer
    pooled context vectors over customer rows)."""
    arch = model.arch
    h = feats.x @ _p(model, "input.w") + _p(model, "input.b")
    pooled = []
    for l in range(arch["conv_layers"]):
        agg = (h[feats.nbr_idx] * feats.nbr_w[:, :, None]).sum(axis=1)
        z = (
            h @ _p(model, f"conv{l}.lin1.w") + _p(model, f"conv{l}.lin1.b")
            + agg @ _p(model, f"conv{l}.lin2.w") + _p(model, f"conv{l}.lin2.b")
        )
        z = np.maximum(z, 0.0)
        if arch["layer_norm"]:
            z = _layer_norm(z, _p(model, f"conv{l}.ln.gamma"), _p(model, f"conv{l}.ln.beta"))
        h = h + z if arch["residual"] else z
        pooled.append(
            np.concatenate([_pool(h[1:], kind) for kind in arch["node_pooling"]])
        )
    return h, pooled


def solution_context(model: ScoringModel, instance: Instance) -> np.ndarray:
    """Context embedding over all nodes of the problem: per-layer pooled node
    embeddings summed across layers."""
    feats = build_features(instance, None, knn=model.arch["knn"],
                           feature_norm=model.feature_norm)
    _, pooled = node_encoder(model, feats)
    return np.sum(pooled, axis=0)


def gnn_forward(model: ScoringModel, feats: SgFeatures, context: np.ndarray) -> float:
    """Predicted improvement potential of one sub-graph."""
    arch = model.arch
    h, _ = node_encoder(model, feats)
    z = h
    for l in range(arch["sg_layers"]):
        z = np.maximum(z @ _p(model, f"sg{l}.w") + _p(model, f"sg{l}.b"), 0.0)
        if arch["layer_norm"]:
            z = _layer_norm(z, _p(model, f"sg{l}.ln.gamma"), _p(model, f"sg{l}.ln.beta"))
    wg = np.concatenate([_pool(z[1:], kind) for kind in arch["sg_pooling"]])
    v = np.concatenate([wg, np.asarray(context, dtype=np.float64)])
    if v.shape[0] != model.params["dec0.w"].shape[0]:
        raise ModelError(
            f"decoder input width {v.shape[0]} does not match model "
            f"({model.params['dec0.w'].shape[0]})"
        )
    for l in range(arch["decoder_layers"]):
        v = v @ _p(model, f"dec{l}.w") + _p(model, f"dec{l}.b")
        if l < arch["decoder_layers"] - 1:
            v = np.maximum(v, 0.0)
            if arch["layer_norm"]:
                v = _layer_norm(v, _p(model, f"dec{l}.ln.gamma"), _p(model, f"dec{l}.ln.beta"))
    return float(v[0])


# ---------------------------------------------------------------------------
# Scorers
# ---------------------------------------------------------------------------

def heuristic_score(instance: Instance, solution: Solution, g: SubGraph) -> float:
    """Weight-free fallback: prior cost of the sub-graph's tours divided by a
    lower proxy (sum of out-and-back costs to each tour's farthest node).
    Larger ratio = more slack = more improvement potential."""
    dm = instance.distance_matrix
    prior = 0.0
    proxy = 0.0
    for t in g.tour_indices:
        tour = solution.tours[t]
        prior += tour_length(instance, tour)
        proxy += 2.0 * max(dm[0, i] for i in tour)
    if proxy <= 0.0:
        return 1.0
    return prior / proxy


class HeuristicScorer:
    """Scorer protocol implementation around heuristic_score."""

    name = "heuristic"

    def score(self, instance: Instance, solution: Solution, g: SubGraph) -> float:
        return heuristic_score(instance, solution, g)


class NeuralScorer:
    """Scorer backed by a ScoringModel; the per-instance context embedding is
    computed once and reused (features depend only on coordinates/demands)."""

    name = "neural"

    def __init__(self, model: ScoringModel):
        self.model = model
        self._context: Dict[str, np.ndarray] = {}

    def score(self, instance: Instance, solution: Solution, g: SubGraph) -> float:
        ctx = self._context.get(instance.name)
        if ctx is None:
            ctx = solution_context(self.model, instance)
            self._context[instance.name] = ctx
        feats = build_features(instance, g, knn=self.model.arch["knn"],
                               feature_norm=self.model.feature_norm)
        return gnn_forward(self.model, feats, ctx)


# ---------------------------------------------------------------------------
# Cache and selection
# ---------------------------------------------------------------------------

@dataclass
class ScoreCache:
    scores: Dict[Tuple[int, ...], float] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0


def score_all(
    scorer,
    instance: Instance,
    solution: Solution,
    sgs: Sequence[SubGraph],
    cache: ScoreCache,
) -> Dict[Tuple[int, ...], float]:
    """Score every sub-graph, skipping keys already in the cache."""
    out = {}
    for g in sgs:
        if g.key in cache.scores:
            cache.hits += 1
        else:
            cache.scores[g.key] = float(scorer.score(instance, solution, g))
            cache.misses += 1
        out[g.key] = cache.scores[g.key]
    return out


def select_greedy(scores: Dict, sgs: Sequence[SubGraph]) -> SubGraph:
    """Highest score wins; ties go to the smaller key."""
    return min(sgs, key=lambda g: (-scores[g.key], g.key))


def _softmax_probs(scores: Dict, sgs: Sequence[SubGraph], temperature: float) -> np.ndarray:
    s = np.array([scores[g.key] for g in sgs]) / temperature
    s -= s.max()
    e = np.exp(s)
    return e / e.sum()


def select_sample(
    scores: Dict,
    sgs: Sequence[SubGraph],
    rng: np.random.Generator,
    temperature: float = 1.0,
) -> SubGraph:
    """Sample one sub-graph from the softmax of scores/temperature."""
    sgs = sorted(sgs, key=lambda g: g.key)
    p = _softmax_probs(scores, sgs, temperature)
    return sgs[int(rng.choice(len(sgs), p=p))]


def select_disjoint(
    scores: Dict,
    sgs: Sequence[SubGraph],
    k: int,
    rng: np.random.Generator,
    temperature: float = 1.0,
) -> List[SubGraph]:
    """Sample up to k pairwise tour-disjoint sub-graphs without replacement,
    rejecting any that overlaps an already chosen one."""
    remaining = sorted(sgs, key=lambda g: g.key)
    chosen: List[SubGraph] = []
    used_tours: set = set()
    while remaining and len(chosen) < k:
        p = _softmax_probs(scores, remaining, temperature)
        idx = int(rng.choice(len(remaining), p=p))
        g = remaining.pop(idx)
        if used_tours.isdisjoint(g.tour_indices):
            chosen.append(g)
            used_tours.update(g.tour_indices)
    return chosen
