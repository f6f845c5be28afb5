#!/usr/bin/env python3
"""Layer-wise linear probing demo on a synthetic corpus, or on a prepared
corpus npz (arrays: stacks (n_utts, L, T, D), targets (n_utts, T, 12)).

Usage:
  python scripts/probe_layers.py                 # synthetic demo
  python scripts/probe_layers.py --data corp.npz --folds 5 --holdout 100
"""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from articodec.analysis import SslFeatureStack, select_layer_cv


def synthetic_corpus(signal_layer=3, n_layers=12, n_utts=60, t=40, d=12,
                     seed=0):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((d, 12))
    stacks, targets = [], []
    for _ in range(n_utts):
        layers = rng.standard_normal((n_layers, t, d))
        targets.append(layers[signal_layer] @ w
                       + 0.05 * rng.standard_normal((t, 12)))
        stacks.append(layers)
    return np.array(stacks), np.array(targets)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--data", default=None)
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--holdout", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if args.data:
        data = np.load(args.data, allow_pickle=True)
        raw_stacks, targets = data["stacks"], list(data["targets"])
    else:
        raw_stacks, targets = synthetic_corpus(seed=args.seed)
        print("no --data given; probing a synthetic corpus with the signal "
              "planted at layer 3")
    stacks = [SslFeatureStack(s, tuple(range(s.shape[0])), 50, "corpus")
              for s in raw_stacks]
    best, reports = select_layer_cv(stacks, targets, folds=args.folds,
                                    holdout_utts=args.holdout, seed=args.seed)
    for report in reports:
        bar = "#" * int(max(report.mean_pcc, 0) * 40)
        print(f"layer {report.layer:2d}: {report.mean_pcc:+.4f} "
              f"+/- {report.ci95:.4f} {bar}")
    print(f"selected layer: {best}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
