"""Torch implementation of the sub-graph scoring network.

This mirrors, operation for operation, the inference pass of the consumer
package (same layer names, same shapes, same float conventions), so that
weights exported through the shared JSON document score identically on both
sides:

  - graph conv layer: relu(h W1 + b1 + (sum_j w_ij h_j) W2 + b2), optional
    layer norm (eps 1e-5) and residual connection
  - context embedding: concat(sum, std) over customer rows after every conv
    layer, summed across layers (std is the population std, correction 0)
  - sub-graph embedding: feed-forward layers on the final node embeddings,
    then concat(sum, max) over customer rows
  - decoder on concat(sg, context): relu(+layer norm) hidden layers and a
    linear scalar head; dropout only in training mode

All tensors are (batch, node, feature); a batch holds graphs of one size.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

import torch
from torch import Tensor, nn

ARCH = {
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


def layer_names(arch: dict) -> Dict[str, Tuple[int, ...]]:
    """Parameter name -> shape, identical to the consumer's expectation."""
    d = arch["embed_dim"]
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
    in_dim = len(arch["sg_pooling"]) * d + len(arch["node_pooling"]) * d
    h = arch["decoder_hidden"]
    dims = [in_dim] + [h] * (arch["decoder_layers"] - 1) + [1]
    for l in range(arch["decoder_layers"]):
        shapes[f"dec{l}.w"] = (dims[l], dims[l + 1])
        shapes[f"dec{l}.b"] = (dims[l + 1],)
        if arch["layer_norm"] and l < arch["decoder_layers"] - 1:
            shapes[f"dec{l}.ln.gamma"] = (dims[l + 1],)
            shapes[f"dec{l}.ln.beta"] = (dims[l + 1],)
    return shapes


def _key(name: str) -> str:
    # ParameterDict keys cannot contain dots
    return name.replace(".", "__")


class ScoreNet(nn.Module):
    def __init__(
        self,
        arch: Optional[dict] = None,
        feature_norm: Optional[dict] = None,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.arch = dict(ARCH, **(arch or {}))
        self.feature_norm = dict(feature_norm or DEFAULT_FEATURE_NORM)
        gen = torch.Generator().manual_seed(seed)
        params = {}
        for name, shape in layer_names(self.arch).items():
            if name.endswith(".b") or name.endswith(".ln.beta"):
                t = torch.zeros(shape, dtype=dtype)
            elif name.endswith(".ln.gamma"):
                t = torch.ones(shape, dtype=dtype)
            else:
                bound = math.sqrt(1.0 / shape[0])
                t = torch.empty(shape, dtype=dtype)
                t.uniform_(-bound, bound, generator=gen)
            params[_key(name)] = nn.Parameter(t)
        self.params = nn.ParameterDict(params)

    def p(self, name: str) -> Tensor:
        return self.params[_key(name)]

    def named_model_params(self):
        for name in layer_names(self.arch):
            yield name, self.p(name)

    # -- building blocks ----------------------------------------------------

    def _ln(self, h: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
        mu = h.mean(dim=-1, keepdim=True)
        var = h.var(dim=-1, keepdim=True, correction=0)
        return gamma * (h - mu) / torch.sqrt(var + 1e-5) + beta

    def _pool(self, h: Tensor, kind: str) -> Tensor:
        # h: (B, customers, D) -> (B, D)
        if kind == "sum":
            return h.sum(dim=1)
        if kind == "std":
            return h.std(dim=1, correction=0)
        if kind == "max":
            return h.max(dim=1).values
        if kind == "mean":
            return h.mean(dim=1)
        raise ValueError(f"unknown pooling {kind!r}")

    def node_encoder(self, x: Tensor, nbr_idx: Tensor, nbr_w: Tensor):
        """x (B,M,F), nbr_idx (B,M,K) long, nbr_w (B,M,K) ->
        final embeddings (B,M,D) and per-layer pooled context (B, pools*D)."""
        arch = self.arch
        d = arch["embed_dim"]
        h = x @ self.p("input.w") + self.p("input.b")
        B, M, K = nbr_idx.shape
        flat = nbr_idx.reshape(B, M * K, 1).expand(-1, -1, d)
        pooled = []
        for l in range(arch["conv_layers"]):
            nbrs = torch.gather(h, 1, flat).reshape(B, M, K, d)
            agg = (nbrs * nbr_w.unsqueeze(-1)).sum(dim=2)
            z = (
                h @ self.p(f"conv{l}.lin1.w") + self.p(f"conv{l}.lin1.b")
                + agg @ self.p(f"conv{l}.lin2.w") + self.p(f"conv{l}.lin2.b")
            )
            z = torch.relu(z)
            if arch["layer_norm"]:
                z = self._ln(z, self.p(f"conv{l}.ln.gamma"), self.p(f"conv{l}.ln.beta"))
            h = h + z if arch["residual"] else z
            pooled.append(torch.cat(
                [self._pool(h[:, 1:], kind) for kind in arch["node_pooling"]],
                dim=-1,
            ))
        return h, torch.stack(pooled, dim=0).sum(dim=0)

    def context(self, x: Tensor, nbr_idx: Tensor, nbr_w: Tensor) -> Tensor:
        """Whole-problem context embedding, (B, pools*D)."""
        _, ctx = self.node_encoder(x, nbr_idx, nbr_w)
        return ctx

    def forward(
        self, x: Tensor, nbr_idx: Tensor, nbr_w: Tensor, context: Tensor
    ) -> Tensor:
        """Score a batch of same-size sub-graphs; context is (B, pools*D)
        from `context()` on each sample's full problem. Returns (B,)."""
        arch = self.arch
        h, _ = self.node_encoder(x, nbr_idx, nbr_w)
        z = h
        for l in range(arch["sg_layers"]):
            z = torch.relu(z @ self.p(f"sg{l}.w") + self.p(f"sg{l}.b"))
            if arch["layer_norm"]:
                z = self._ln(z, self.p(f"sg{l}.ln.gamma"), self.p(f"sg{l}.ln.beta"))
        wg = torch.cat(
            [self._pool(z[:, 1:], kind) for kind in arch["sg_pooling"]], dim=-1
        )
        v = torch.cat([wg, context], dim=-1)
        drop = arch.get("dropout", 0.0)
        for l in range(arch["decoder_layers"]):
            v = v @ self.p(f"dec{l}.w") + self.p(f"dec{l}.b")
            if l < arch["decoder_layers"] - 1:
                v = torch.relu(v)
                if arch["layer_norm"]:
                    v = self._ln(v, self.p(f"dec{l}.ln.gamma"), self.p(f"dec{l}.ln.beta"))
                if self.training and drop > 0:
                    v = nn.functional.dropout(v, p=drop, training=True)
        return v.squeeze(-1)
