"""Command-line umbrella: encode, synth, train, probe, align, convert,
manip, eval, serve, ingest, speaker-embed."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import CodecError, DataError, MissingAssetError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ASSETS = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_stack(path):
    from .stack import CodecStack

    return CodecStack.load(path)


def _cmd_ingest(args) -> int:
    from .manifest import ingest

    manifest, warnings_list = ingest(args.corpus, layout=args.layout)
    manifest.write_jsonl(args.output)
    for warning in warnings_list:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote {len(manifest.records)} records to {args.output}")
    return EXIT_OK


def _cmd_encode(args) -> int:
    from .audio_io import load_wav
    from .formats import write_embedding, write_features

    stack = _load_stack(args.stack)
    wave = load_wav(args.wav)
    features, spk = stack.encode(wave, train_mode=args.train_mode)
    write_features(features, args.output)
    print(f"wrote {features.n_frames} frames to {args.output}")
    if args.spk:
        write_embedding(spk, args.spk)
        print(f"wrote speaker embedding to {args.spk}")
    return EXIT_OK


def _cmd_speaker_embed(args) -> int:
    from .audio_io import load_wav
    from .formats import write_embedding

    stack = _load_stack(args.stack)
    clips = [load_wav(p) for p in args.wavs]
    embedding = stack.make_template(clips, k=args.k)
    write_embedding(embedding, args.output)
    print(f"wrote speaker embedding to {args.output}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    from .audio_io import save_wav
    from .formats import read_embedding, read_features

    stack = _load_stack(args.stack)
    features = read_features(args.features)
    spk = read_embedding(args.spk)
    wave = stack.synthesize(features, spk)
    save_wav(wave, args.output)
    print(f"wrote {len(wave)} samples to {args.output}")
    return EXIT_OK


TRAIN_KEYS = """\
base_channels film_hidden pitch_divisor use_weight_norm disc_preset
batch_size lr steps checkpoint_every window_ms seed frontend_dim"""


def _train_schema():
    from .config import ConfigField, Schema

    return Schema([
        ConfigField("base_channels", "int", 512),
        ConfigField("film_hidden", "int", 64),
        ConfigField("pitch_divisor", "float", 100.0),
        ConfigField("use_weight_norm", "bool", True),
        ConfigField("disc_preset", "str", "full"),
        ConfigField("batch_size", "int", 64),
        ConfigField("lr", "float", 1e-4),
        ConfigField("steps", "int", 1_500_000),
        ConfigField("checkpoint_every", "int", 10_000),
        ConfigField("window_ms", "int", 320),
        ConfigField("seed", "int", 0),
        ConfigField("frontend_dim", "int", 1024),
    ])


def _cmd_train(args) -> int:
    from .audio_io import load_wav
    from .formats import read_features
    from .manifest import Manifest
    from .signal import resample, zscore
    from .source import AutocorrelationTracker, track_pitch
    from .speaker import MockFrameFrontend, SpeakerFfn, weighted_pool
    from .types import AUDIO_RATE, Waveform
    from .vocoder import (
        DiscriminatorConfig, GeneratorConfig, TrainConfig, TrainUtterance,
        VocoderTrainer,
    )

    schema = _train_schema()
    values = schema.load(args.config) if args.config else schema.defaults()
    print("effective config:")
    print(schema.dump(values), end="")

    manifest = Manifest.read_jsonl(args.data)
    manifest.validate()
    if not manifest.records:
        raise DataError("empty training manifest")

    gen_cfg = GeneratorConfig(
        base_channels=values["base_channels"],
        film_hidden=values["film_hidden"],
        pitch_divisor=values["pitch_divisor"],
        use_weight_norm=values["use_weight_norm"],
    )
    disc_cfg = (DiscriminatorConfig.tiny() if values["disc_preset"] == "tiny"
                else DiscriminatorConfig())
    train_cfg = TrainConfig(
        lr=values["lr"], batch_size=values["batch_size"],
        checkpoint_every=values["checkpoint_every"],
        window_ms=values["window_ms"], seed=values["seed"],
        total_steps=values["steps"])

    frontend = MockFrameFrontend(dim=values["frontend_dim"])
    tracker = AutocorrelationTracker()
    dataset = []
    for rec in manifest.records:
        if not rec.feature_path:
            raise DataError(
                f"{rec.utterance_id}: train needs feature_path per record "
                "(run `articodec encode` first)")
        features = read_features(rec.feature_path)
        wave = resample(load_wav(rec.audio_path), AUDIO_RATE)
        normalized = Waveform(zscore(wave.samples), AUDIO_RATE)
        _, periodicity = track_pitch(normalized, tracker=tracker)
        frames = frontend.extract(normalized)
        t = min(frames.shape[0], len(periodicity))
        pooled = weighted_pool(frames[:t], periodicity[:t])
        n = min(len(normalized.samples) // 320, features.n_frames)
        dataset.append(TrainUtterance(
            wave=normalized.samples[: n * 320], features=features,
            pooled=pooled))

    ffn = SpeakerFfn(in_dim=values["frontend_dim"],
                     hidden_dim=values["frontend_dim"])
    trainer = VocoderTrainer(gen_cfg=gen_cfg, disc_cfg=disc_cfg,
                             train_cfg=train_cfg, ffn=ffn)
    steps = args.steps if args.steps is not None else values["steps"]
    for ckpt in trainer.run(dataset, steps, out_dir=args.out,
                            resume_from=args.resume):
        print(f"step {ckpt.step}: lr={ckpt.lr:.2e}")
    return EXIT_OK


def _cmd_probe(args) -> int:
    from .analysis import SslFeatureStack, select_layer_cv

    data = np.load(args.data, allow_pickle=True)
    stacks = [SslFeatureStack(s, tuple(range(s.shape[0])), 50, "corpus")
              for s in data["stacks"]]
    targets = list(data["targets"])
    lo, _, hi = args.layers.partition("..")
    layer_range = range(int(lo), int(hi) + 1) if hi else [int(lo)]
    stacks = [SslFeatureStack(s.layers[list(layer_range)],
                              tuple(layer_range), 50, s.encoder_id)
              for s in stacks]
    best, reports = select_layer_cv(stacks, targets, folds=args.folds,
                                    holdout_utts=args.holdout)
    for report in reports:
        print(f"layer {report.layer}: mean PCC {report.mean_pcc:.4f} "
              f"+/- {report.ci95:.4f}")
    print(f"best layer: {best}")
    if args.report:
        Path(args.report).write_text(json.dumps({
            "best_layer": int(best),
            "layers": [{"layer": r.layer, "mean_pcc": r.mean_pcc,
                        "ci95": r.ci95, "fold_scores": r.fold_scores}
                       for r in reports],
        }, indent=2))
    return EXIT_OK


def _cmd_align(args) -> int:
    from .alignment import AffineMap, apply_affine, fit_affine
    from .formats import read_features, write_features

    if args.mode == "fit":
        src = read_features(args.src)
        tgt = read_features(args.tgt)
        affine = fit_affine(src.ema, tgt.ema, lam=args.lam)
        Path(args.output).write_bytes(affine.to_bytes())
        print(f"wrote affine map to {args.output}")
    else:
        affine = AffineMap.from_bytes(Path(args.map).read_bytes())
        features = read_features(args.src)
        from .types import ArticulatoryFeatures

        mapped = ArticulatoryFeatures(apply_affine(affine, features.ema),
                                      features.source)
        write_features(mapped, args.output)
        print(f"wrote transformed features to {args.output}")
    return EXIT_OK


def _cmd_convert(args) -> int:
    from .audio_io import load_wav, save_wav
    from .control import convert_voice
    from .formats import read_embedding

    stack = _load_stack(args.stack)
    wave = load_wav(args.src)
    target = read_embedding(args.target_spk)
    mean_s, _, std_s = args.target_pitch.partition(":")
    out = convert_voice(wave, target, (float(mean_s), float(std_s)), stack,
                        p_rescale=not args.no_p_rescale)
    save_wav(out, args.output)
    print(f"wrote converted audio to {args.output}")
    return EXIT_OK


def _cmd_manip(args) -> int:
    from .formats import read_features, write_features

    if args.mode == "interp":
        from .control import interpolate

        a = read_features(args.a)
        b = read_features(args.b)
        channels = [c.strip() for c in args.channels.split(",") if c.strip()]
        out = interpolate(a, b, args.alpha, channels)
    else:
        from .control import shift_channel

        out = shift_channel(read_features(args.features), args.channel, args.ms)
    write_features(out, args.output)
    print(f"wrote manipulated features to {args.output}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    from .audio_io import load_wav
    from .manifest import Manifest
    from .metrics import cer as cer_fn
    from .metrics import coding_recoding, few_shot_sid, wer_text
    from .scorers import ScorerCache, SubprocessScorer, score_external

    stack = _load_stack(args.stack)
    manifest = Manifest.read_jsonl(args.manifest)
    manifest.validate()
    scorer = SubprocessScorer(args.asr_adapter) if args.asr_adapter else None
    skipped = []

    reports = []
    waves_out = []
    for rec in manifest.records:
        wave = load_wav(rec.audio_path)
        features, spk = stack.encode(wave)
        resynth = stack.synthesize(features, spk)
        re_features, re_spk = stack.encode(resynth)
        reports.append(coding_recoding(features, spk, re_features, re_spk))
        waves_out.append((rec, resynth, spk))

    result = {
        "dataset": str(args.manifest),
        "n_utts": len(manifest.records),
        "coding_recoding": {
            key: float(np.mean([getattr(r, key) for r in reports]))
            for key in ("articulation", "pitch", "loudness", "speaker")
        },
        "skipped": skipped,
    }

    transcripts = [rec.transcript for rec, _, _ in waves_out]
    if scorer is not None and all(t for t in transcripts):
        scored = score_external([w for _, w, _ in waves_out], scorer,
                                ScorerCache())
        wers, cers = [], []
        for (rec, _, _), item in zip(waves_out, scored):
            if "result" in item:
                wers.append(wer_text(rec.transcript, item["result"]))
                cers.append(cer_fn(rec.transcript, item["result"]))
        if wers:
            result["wer"] = float(np.mean(wers))
            result["cer"] = float(np.mean(cers))
        else:
            skipped.append("wer")
            skipped.append("cer")
    else:
        skipped.extend(["wer", "cer"])

    by_speaker: dict = {}
    for rec, _, spk in waves_out:
        by_speaker.setdefault(rec.speaker_id, spk)
    if len(by_speaker) >= 2:
        correct = sum(
            few_shot_sid(by_speaker, spk) == rec.speaker_id
            for rec, _, spk in waves_out)
        result["sid_acc"] = correct / len(waves_out)
    else:
        skipped.append("sid_acc")

    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if args.report:
        Path(args.report).write_text(text)
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import TemplateStore, serve

    stack = _load_stack(args.stack)
    templates = TemplateStore(Path(args.stack) / "templates.json")
    if args.print_config:
        print(stack.effective_config(), end="")
        print(f"# config digest: {stack.config_digest()}")
        return EXIT_OK
    serve(stack, templates, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="articodec",
                     description="Articulatory speech codec toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="scan a corpus into a manifest")
    p.add_argument("corpus")
    p.add_argument("--layout", default="flat",
                   choices=["flat", "librittsr", "vctk"])
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("encode", help="audio -> articulatory features")
    p.add_argument("wav")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--train-mode", action="store_true")
    p.add_argument("--stack", required=True)
    p.add_argument("--spk", help="also write the speaker embedding here")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("speaker-embed", help="clips -> template embedding")
    p.add_argument("wavs", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--stack", required=True)
    p.set_defaults(func=_cmd_speaker_embed)

    p = sub.add_parser("synth", help="features + embedding -> audio")
    p.add_argument("features")
    p.add_argument("spk")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stack", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train the vocoder")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--resume")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("probe", help="layer-wise linear probing")
    p.add_argument("--data", required=True,
                   help="npz with 'stacks' (L,T,D per utt) and 'targets' (T,12)")
    p.add_argument("--layers", default="0..11")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--holdout", type=int, default=100)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("align", help="fit/apply cross-speaker affine maps")
    align_sub = p.add_subparsers(dest="mode", required=True)
    pf = align_sub.add_parser("fit")
    pf.add_argument("src")
    pf.add_argument("tgt")
    pf.add_argument("-o", "--output", required=True)
    pf.add_argument("--lam", type=float, default=None)
    pf.set_defaults(func=_cmd_align)
    pa = align_sub.add_parser("apply")
    pa.add_argument("map")
    pa.add_argument("src")
    pa.add_argument("-o", "--output", required=True)
    pa.set_defaults(func=_cmd_align)

    p = sub.add_parser("convert", help="zero-shot voice conversion")
    p.add_argument("src")
    p.add_argument("--target-spk", required=True)
    p.add_argument("--target-pitch", required=True, metavar="MEAN:STD")
    p.add_argument("--no-p-rescale", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stack", required=True)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("manip", help="feature-space manipulation")
    manip_sub = p.add_subparsers(dest="mode", required=True)
    pi = manip_sub.add_parser("interp")
    pi.add_argument("a")
    pi.add_argument("b")
    pi.add_argument("--alpha", type=float, required=True)
    pi.add_argument("--channels", required=True)
    pi.add_argument("-o", "--output", required=True)
    pi.set_defaults(func=_cmd_manip)
    ps = manip_sub.add_parser("shift")
    ps.add_argument("features")
    ps.add_argument("--channel", required=True)
    ps.add_argument("--ms", type=float, required=True)
    ps.add_argument("-o", "--output", required=True)
    ps.set_defaults(func=_cmd_manip)

    p = sub.add_parser("eval", help="coding-recoding + intelligibility report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--stack", required=True)
    p.add_argument("--asr-adapter", nargs="+")
    p.add_argument("--report")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--stack", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8572)
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except MissingAssetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSETS
    except (DataError, CodecError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
