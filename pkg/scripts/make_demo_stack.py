#!/usr/bin/env python3
"""Build a small self-contained codec stack (mock encoder + fallback tracker
+ randomly initialized vocoder) so the CLI and the editor UI can run without
any model downloads.

Usage: python scripts/make_demo_stack.py out_dir [--base-channels 32]
"""
import argparse
import sys
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from articodec.analysis import LinearMap, MockSpeechEncoder
from articodec.source import AutocorrelationTracker
from articodec.speaker import MockFrameFrontend, SpeakerFfn
from articodec.stack import CodecStack
from articodec.vocoder import Generator, GeneratorConfig


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("out_dir")
    parser.add_argument("--base-channels", type=int, default=32)
    parser.add_argument("--film-hidden", type=int, default=16)
    parser.add_argument("--encoder-dim", type=int, default=24)
    parser.add_argument("--frontend-dim", type=int, default=48)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    torch.manual_seed(args.seed)
    encoder = MockSpeechEncoder(dim=args.encoder_dim, n_layers=4)
    aai = LinearMap(rng.standard_normal((args.encoder_dim, 12)) * 0.3,
                    rng.standard_normal(12) * 0.1, 2, encoder.encoder_id)
    stack = CodecStack(
        encoder=encoder,
        aai=aai,
        tracker=AutocorrelationTracker(),
        frontend=MockFrameFrontend(dim=args.frontend_dim),
        ffn=SpeakerFfn(in_dim=args.frontend_dim, hidden_dim=args.frontend_dim),
        generator=Generator(GeneratorConfig(base_channels=args.base_channels,
                                            film_hidden=args.film_hidden)),
        config_hash="demo",
    )
    stack.save(args.out_dir)
    print(f"wrote demo stack to {args.out_dir}")
    print(f"serve it with: articodec serve --stack {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
