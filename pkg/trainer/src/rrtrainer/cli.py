"""Command-line entry point: train a scorer on a corpus and export weights."""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .data import DataError, load_corpus
from .export import export_weights
from .train import TrainConfig, constant_mean_baseline, train


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rrtrain",
        description="train the sub-graph scoring model on a scored corpus",
    )
    p.add_argument("corpus", help="score-data JSON file")
    p.add_argument("--out", required=True, help="weights document to write")
    p.add_argument("--metrics", default=None,
                   help="optional per-epoch metrics CSV")
    p.add_argument("--loss", choices=["huber", "mse"], default="huber")
    p.add_argument("--epochs", type=int, default=80)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=0.0005)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = TrainConfig(
        loss=args.loss,
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        val_fraction=args.val_fraction,
        seed=args.seed,
    )
    try:
        with open(args.corpus) as fh:
            corpus = load_corpus(fh.read())
        model, log = train(corpus, config)
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(args.out, "w") as fh:
        fh.write(export_weights(model))
    if args.metrics:
        with open(args.metrics, "w") as fh:
            fh.write("epoch,lr,train_mae,train_mse,val_mae,val_mse\n")
            for m in log:
                fh.write(f"{m.epoch},{m.lr!r},{m.train_mae!r},{m.train_mse!r},"
                         f"{m.val_mae!r},{m.val_mse!r}\n")
    base_mae, _ = constant_mean_baseline(corpus, config)
    last = log[-1]
    print(f"epochs {len(log)}: val MAE {last.val_mae:.5f} "
          f"(constant-mean baseline {base_mae:.5f}) -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
