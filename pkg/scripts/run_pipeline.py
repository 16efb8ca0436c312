#!/usr/bin/env python3
"""End-to-end desk-scale experiment on a toy corpus.

Generates data, trains the intensity extractor and the flow-matching
acoustic model, extracts hierarchical emotion distributions, runs an
utterance-level Sad sweep, and prints prosody trends plus a resynthesis
metric summary.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from emotts import evaluation, pipeline
from emotts.corpus import load_audio, load_corpus, load_speaker_genders, split_dataset
from emotts.hed import LEVELS, intensity_sweep
from emotts.intensity import IntensityModelConfig, train_intensity_model
from emotts.service import JobConfig, waveform_to_wav_bytes
from emotts.toydata import generate_toy_corpus
from emotts.tts import SynthesisRequest, TTSConfig, train_tts


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="workspace directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--speakers", type=int, default=2)
    parser.add_argument("--utterances-per-cell", type=int, default=6)
    parser.add_argument("--intensity-epochs", type=int, default=15)
    parser.add_argument("--tts-steps", type=int, default=400)
    args = parser.parse_args()

    if not (args.out / "config.json").exists():
        generate_toy_corpus(args.out, n_speakers=args.speakers,
                            utterances_per_cell=args.utterances_per_cell,
                            seed=args.seed)
    config = JobConfig.from_file(args.out / "config.json")
    corpus = load_corpus(config.corpus_root)
    tracks = pipeline.load_alignments(config.alignments_dir,
                                      ids=sorted(corpus.records))
    split = split_dataset(corpus, seed=args.seed)
    genders = load_speaker_genders(config.speaker_genders_csv)
    sources = config.feature_sources()
    cache: dict = {}

    print("== intensity extractor ==")
    train_samples = pipeline.build_segment_samples(
        corpus, tracks, split.ids("train"), sources, genders, cache=cache)
    val_samples = pipeline.build_segment_samples(
        corpus, tracks, split.ids("val"), sources, genders, cache=cache)
    model_config = IntensityModelConfig(
        input_dim=train_samples[0].frame_matrix().shape[1], head_type="EPR")
    intensity_model, report = train_intensity_model(
        train_samples, val_samples, model_config, seed=args.seed,
        max_epochs=args.intensity_epochs)
    print(f"  val accuracy {report.val_emotion_accuracy[report.selected_epoch]:.3f}"
          f"  alpha {intensity_model.alpha}"
          f"  stabilized adversary {report.post_stabilization_adversary_accuracy}")

    print("== hierarchical distributions ==")
    models = {level: intensity_model for level in LEVELS}
    all_ids = sorted(corpus.records)
    heds = pipeline.extract_corpus_heds(corpus, tracks, all_ids, models,
                                        sources, cache=cache)
    codes = np.concatenate([h.matrix for h in heds.values()])
    factors = np.concatenate([[corpus[uid].speaker_id] * heds[uid].n_phones
                              for uid in heds])
    bins = min(30, codes.shape[0] // 4)
    print(f"  {len(heds)} utterances, speaker MIG({bins} bins) "
          f"{evaluation.mig(codes, factors, bins):.4f}")

    print("== acoustic model ==")
    tts_config = TTSConfig(phone_inventory=pipeline.phone_inventory(tracks),
                           d_model=64, ff_dim=128, decoder_width=32)
    items = pipeline.build_tts_items(corpus, tracks, heds, split.ids("train"),
                                     tts_config.speaker_dim, seed=args.seed)
    acoustic, tts_report = train_tts(items, tts_config, steps=args.tts_steps,
                                     seed=args.seed)
    print(f"  flow loss {np.mean(tts_report.cfm_loss[:10]):.2f} -> "
          f"{np.mean(tts_report.cfm_loss[-10:]):.2f}")

    print("== sweep + prosody trends ==")
    uid = split.ids("test")[0]
    track = tracks[uid]
    sweep_dir = args.out / "sweep"
    sweep_dir.mkdir(exist_ok=True)

    def synth(hed):
        request = SynthesisRequest(
            hed=hed,
            speaker_embedding=pipeline.speaker_embedding_for(
                corpus[uid], None, tts_config.speaker_dim),
            phonemes=[p.symbol for p in track.phones],
            durations=[max(1, round((p.end - p.start) * 62.5))
                       for p in track.phones],
            seed=args.seed)
        _, audio = acoustic.synthesize(request)
        return audio

    trends = evaluation.prosody_trend_analysis(synth, heds[uid],
                                               emotions=["Sad", "Angry"])
    for emotion, row in trends.items():
        line = ", ".join(f"{feat}={e.correlation:+.2f}" if e.correlation is not None
                         else f"{feat}=n/a" for feat, e in row.items())
        print(f"  {emotion}: {line}")

    for value, hed in zip((0.0, 0.5, 1.0),
                          intensity_sweep(heds[uid], "utterance", "Sad",
                                          [0.0, 0.5, 1.0])):
        (sweep_dir / f"{uid}_sad_{value:.1f}.wav").write_bytes(
            waveform_to_wav_bytes(synth(hed)))
    print(f"  wavs in {sweep_dir}")

    print("== resynthesis metrics (3 test utterances) ==")
    pairs = []
    for test_id in split.ids("test")[:3]:
        t2 = tracks[test_id]
        request = SynthesisRequest(
            hed=heds[test_id],
            speaker_embedding=pipeline.speaker_embedding_for(
                corpus[test_id], None, tts_config.speaker_dim),
            phonemes=[p.symbol for p in t2.phones],
            durations=[max(1, round((p.end - p.start) * 62.5))
                       for p in t2.phones],
            seed=args.seed)
        _, audio = acoustic.synthesize(request)
        pairs.append((load_audio(corpus[test_id]), audio))
    metrics = evaluation.pairwise_metric_report(pairs)
    print(f"  {json.dumps(metrics.to_document())}")


if __name__ == "__main__":
    main()
