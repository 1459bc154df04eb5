"""Finite-difference verification of the autograd gradients.

Central differences on a random 1% subset of the parameters, in float64;
the returned value is the worst relative error over the probed entries."""

from __future__ import annotations

from typing import Optional

import numpy as np
import torch

from .model import ScoreNet


def finite_diff_check(
    model: ScoreNet,
    x: torch.Tensor,
    nbr_idx: torch.Tensor,
    nbr_w: torch.Tensor,
    context_feats,
    target: float,
    loss: str = "huber",
    fraction: float = 0.01,
    eps: float = 1e-6,
    seed: int = 0,
) -> float:
    """`context_feats` is the (x, idx, w) triple of the sample's full
    problem so gradients through the context branch are probed too."""
    if next(model.parameters()).dtype != torch.float64:
        raise ValueError("finite differences need a float64 model")
    model.eval()
    if loss == "huber":
        loss_fn = torch.nn.HuberLoss()
    else:
        loss_fn = torch.nn.MSELoss()
    y = torch.tensor([target], dtype=torch.float64)

    def compute_loss() -> torch.Tensor:
        ctx = model.context(*context_feats)
        pred = model(x, nbr_idx, nbr_w, ctx.expand(x.shape[0], -1))
        return loss_fn(pred, y)

    model.zero_grad()
    compute_loss().backward()

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, param in model.named_model_params():
        flat = param.detach().reshape(-1)
        n = flat.numel()
        k = max(1, int(round(fraction * n)))
        picks = rng.choice(n, size=min(k, n), replace=False)
        grad = (param.grad.reshape(-1) if param.grad is not None
                else torch.zeros_like(flat))
        with torch.no_grad():
            mid = float(compute_loss())
        for j in picks:
            j = int(j)
            orig = float(flat[j])
            with torch.no_grad():
                param.reshape(-1)[j] = orig + eps
                hi = float(compute_loss())
                param.reshape(-1)[j] = orig - eps
                lo = float(compute_loss())
                param.reshape(-1)[j] = orig
            d_plus = (hi - mid) / eps
            d_minus = (mid - lo) / eps
            # a kink (relu / Huber corner) between the probe points makes the
            # central difference meaningless; the one-sided slopes betray it
            if abs(d_plus - d_minus) > 1e-4 * max(1.0, abs(d_plus), abs(d_minus)):
                continue
            numeric = 0.5 * (d_plus + d_minus)
            analytic = float(grad[j])
            # entries this small are pure finite-difference roundoff; the
            # absolute agreement (~1e-10) is what matters there
            denom = max(abs(numeric), abs(analytic), 1e-5)
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst
