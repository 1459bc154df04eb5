"""Training loop: Adam with a halve-every-35-epochs schedule, gradient-norm
clipping, Huber loss by default, and a by-instance validation split."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .data import Corpus, DataError, Sample, build_features, split_by_instance
from .model import ScoreNet


@dataclass
class TrainConfig:
    loss: str = "huber"              # huber | mse
    lr: float = 0.0005
    lr_halving_epochs: int = 35
    clip_norm: float = 0.5
    epochs: int = 80
    batch_size: int = 128
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.loss not in ("huber", "mse"):
            raise ValueError(f"unknown loss {self.loss!r}")
        for name in ("lr", "clip_norm", "epochs", "batch_size",
                     "lr_halving_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")

    def lr_at(self, epoch: int) -> float:
        return self.lr * 0.5 ** (epoch // self.lr_halving_epochs)


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    train_mae: float
    train_mse: float
    val_mae: float
    val_mse: float


class _Batcher:
    """Groups samples by (instance, sub-graph size) so each minibatch is one
    stacked tensor sharing a single problem context."""

    def __init__(self, corpus: Corpus, samples: Sequence[Sample], model: ScoreNet,
                 dtype: torch.dtype):
        self.dtype = dtype
        knn = model.arch["knn"]
        norm = model.feature_norm
        self.ctx_feats = {}
        for name, inst in corpus.instances.items():
            x, idx, w = build_features(inst, None, knn=knn, feature_norm=norm)
            self.ctx_feats[name] = tuple(
                torch.as_tensor(a, dtype=dtype if a.dtype.kind == "f" else torch.long)[None]
                for a in (x, idx, w)
            )
        self.groups: Dict[Tuple[str, int], List[int]] = {}
        self.feats = []
        self.targets = []
        for i, s in enumerate(samples):
            x, idx, w = build_features(corpus.instances[s.instance], s.nodes,
                                       knn=knn, feature_norm=norm)
            self.feats.append((
                torch.as_tensor(x, dtype=dtype),
                torch.as_tensor(idx, dtype=torch.long),
                torch.as_tensor(w, dtype=dtype),
            ))
            self.targets.append(s.target)
            self.groups.setdefault((s.instance, len(s.nodes)), []).append(i)
        self.targets = torch.as_tensor(self.targets, dtype=dtype)

    def batches(self, batch_size: int, rng: Optional[np.random.Generator] = None):
        """Yields (instance name, x, nbr_idx, nbr_w, targets)."""
        keys = sorted(self.groups)
        if rng is not None:
            rng.shuffle(keys)
        for key in keys:
            members = list(self.groups[key])
            if rng is not None:
                rng.shuffle(members)
            for lo in range(0, len(members), batch_size):
                rows = members[lo:lo + batch_size]
                x = torch.stack([self.feats[i][0] for i in rows])
                idx = torch.stack([self.feats[i][1] for i in rows])
                w = torch.stack([self.feats[i][2] for i in rows])
                yield key[0], x, idx, w, self.targets[rows]


def _predict(model: ScoreNet, batcher: _Batcher, batch_size: int,
             ctx_cache: Optional[dict] = None):
    preds, targs = [], []
    for name, x, idx, w, y in batcher.batches(batch_size):
        if ctx_cache is not None and name in ctx_cache:
            ctx = ctx_cache[name]
        else:
            ctx = model.context(*batcher.ctx_feats[name])
            if ctx_cache is not None:
                ctx_cache[name] = ctx
        preds.append(model(x, idx, w, ctx.expand(x.shape[0], -1)))
        targs.append(y)
    return torch.cat(preds), torch.cat(targs)


def _mae_mse(pred: torch.Tensor, targ: torch.Tensor) -> Tuple[float, float]:
    err = pred - targ
    return float(err.abs().mean()), float((err * err).mean())


def train(
    corpus: Corpus,
    config: TrainConfig,
    arch: Optional[dict] = None,
    dtype: torch.dtype = torch.float32,
) -> Tuple[ScoreNet, List[EpochMetrics]]:
    if len(corpus.instances) < 2:
        raise DataError("need at least two instances for a by-instance split")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    train_samples, val_samples = split_by_instance(
        corpus, config.val_fraction, config.seed
    )
    model = ScoreNet(arch=arch, seed=config.seed, dtype=dtype)
    train_b = _Batcher(corpus, train_samples, model, dtype)
    val_b = _Batcher(corpus, val_samples, model, dtype)

    if config.loss == "huber":
        loss_fn = torch.nn.HuberLoss()
    else:
        loss_fn = torch.nn.MSELoss()
    opt = torch.optim.Adam(model.parameters(), lr=config.lr)

    log: List[EpochMetrics] = []
    for epoch in range(config.epochs):
        lr = config.lr_at(epoch)
        for group in opt.param_groups:
            group["lr"] = lr
        model.train()
        for name, x, idx, w, y in train_b.batches(config.batch_size, rng):
            opt.zero_grad()
            ctx = model.context(*train_b.ctx_feats[name])
            pred = model(x, idx, w, ctx.expand(x.shape[0], -1))
            loss = loss_fn(pred, y)
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.clip_norm)
            opt.step()
        model.eval()
        with torch.no_grad():
            cache: dict = {}
            tr = _mae_mse(*_predict(model, train_b, config.batch_size, cache))
            va = _mae_mse(*_predict(model, val_b, config.batch_size, cache))
        log.append(EpochMetrics(epoch=epoch, lr=lr, train_mae=tr[0],
                                train_mse=tr[1], val_mae=va[0], val_mse=va[1]))
    return model, log


def constant_mean_baseline(corpus: Corpus, config: TrainConfig) -> Tuple[float, float]:
    """Held-out MAE/MSE of predicting the training-set mean target."""
    train_samples, val_samples = split_by_instance(
        corpus, config.val_fraction, config.seed
    )
    mean = float(np.mean([s.target for s in train_samples]))
    errs = np.array([s.target - mean for s in val_samples])
    return float(np.abs(errs).mean()), float((errs * errs).mean())
