#!/usr/bin/env python3
"""Overfit a tiny vocoder on one synthetic utterance and report the mel-L1
trajectory. A fast end-to-end sanity run of the whole training loop.

Usage: python scripts/train_tiny.py [--steps 2000] [--out ckpt_dir]
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from articodec.analysis import LinearMap, MockSpeechEncoder
from articodec.signal import zscore
from articodec.source import AutocorrelationTracker
from articodec.speaker import MockFrameFrontend, SpeakerFfn
from articodec.stack import CodecStack
from articodec.types import Waveform
from articodec.vocoder import (
    DiscriminatorConfig,
    Generator,
    GeneratorConfig,
    TrainConfig,
    TrainUtterance,
    VocoderTrainer,
)


def synthetic_utterance(stack: CodecStack) -> TrainUtterance:
    sr = 16000
    t = np.arange(sr) / sr
    f0 = 150.0 * (1.0 + 0.03 * np.sin(2 * np.pi * 5.0 * t))
    phase = 2 * np.pi * np.cumsum(f0) / sr
    x = (0.6 * np.sin(phase) + 0.25 * np.sin(2 * phase)) \
        * (0.4 + 0.6 * np.sin(np.pi * t) ** 2)
    clip = Waveform(0.5 * x, sr)
    features, _ = stack.encode(clip)
    pooled = stack.pooled_frontend(clip)
    n = features.n_frames
    return TrainUtterance(wave=zscore(clip.samples)[: n * 320],
                          features=features, pooled=pooled)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--base-channels", type=int, default=32)
    parser.add_argument("--batch-size", type=int, default=2)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    encoder = MockSpeechEncoder(dim=24, n_layers=4)
    stack = CodecStack(
        encoder=encoder,
        aai=LinearMap(rng.standard_normal((24, 12)) * 0.3,
                      rng.standard_normal(12) * 0.1, 2, encoder.encoder_id),
        tracker=AutocorrelationTracker(),
        frontend=MockFrameFrontend(dim=48),
        ffn=SpeakerFfn(in_dim=48, hidden_dim=48),
        generator=Generator(GeneratorConfig(base_channels=16, film_hidden=8)),
    )
    utt = synthetic_utterance(stack)

    trainer = VocoderTrainer(
        gen_cfg=GeneratorConfig(base_channels=args.base_channels,
                                film_hidden=16),
        disc_cfg=DiscriminatorConfig.tiny(),
        train_cfg=TrainConfig(batch_size=args.batch_size,
                              checkpoint_every=500, seed=args.seed),
        ffn=SpeakerFfn(in_dim=48, hidden_dim=48),
    )
    initial = trainer.eval_mel_l1(utt)
    print(f"step 0: mel L1 = {initial:.3f}")
    batch_rng = np.random.default_rng(args.seed)
    start = time.time()
    for step in range(1, args.steps + 1):
        logs = trainer.train_step(*trainer._make_batch([utt], batch_rng))
        if step % 200 == 0:
            mel = trainer.eval_mel_l1(utt)
            print(f"step {step}: mel L1 = {mel:.3f} "
                  f"(gen {logs['gen']:.2f}, disc {logs['disc']:.2f}, "
                  f"{(time.time() - start) / step * 1000:.0f} ms/step)")
    if args.out:
        trainer.save(Path(args.out) / f"tiny_step{trainer.step}.ckpt")
        print(f"checkpoint written under {args.out}")
    final = trainer.eval_mel_l1(utt)
    print(f"final mel L1 = {final:.3f} ({final / initial:.2%} of initial)")
    return 0 if final < 0.5 * initial else 1


if __name__ == "__main__":
    sys.exit(main())
