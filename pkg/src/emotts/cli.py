"""Command-line entry points.

Every command takes a JSON config file (see README for the key set), writes
a run manifest (config hash, seed, library versions) next to its outputs,
and reports failures as machine-readable JSON on stderr with a nonzero exit
code.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import dsp, evaluation, pipeline, toydata
from .containers import write_matrix
from .corpus import (INTENSITY_EMOTIONS, load_corpus, load_speaker_genders,
                     split_dataset)
from .hed import LEVELS, SWEEP_VALUES, load_hed, save_hed
from .intensity import (IntensityModelConfig, calibrate_alpha,
                        forward_intensity, load_intensity_model,
                        save_intensity_model, train_intensity_model)
from .service import JobConfig, ServiceState, build_app, waveform_to_wav_bytes
from .tts import (SynthesisRequest, TTSConfig, load_tts_model, save_tts_model,
                  train_tts)


def _write_manifest(out_dir: Path, config: JobConfig, command: str,
                    seed: int, extra: dict | None = None) -> None:
    import torch
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "config_hash": config.config_hash(),
        "seed": seed,
        "versions": {"emotts": __version__, "numpy": np.__version__,
                     "torch": torch.__version__},
    }
    if extra:
        doc.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2),
                                           encoding="utf-8")


def _cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - boundary for error JSON
            sys.stderr.write(json.dumps({
                "error": type(exc).__name__, "message": str(exc)}) + "\n")
            sys.exit(1)
    return wrapper


def _load_state(config_path: str) -> tuple[JobConfig, ServiceState]:
    config = JobConfig.from_file(config_path)
    return config, ServiceState(config)


def _corpus_pieces(config: JobConfig):
    corpus = load_corpus(config.corpus_root, manifest=config.manifest_csv,
                         resample=config.resample)
    tracks = pipeline.load_alignments(config.alignments_dir,
                                      ids=sorted(corpus.records))
    split = split_dataset(corpus, seed=config.seed)
    genders = (load_speaker_genders(config.speaker_genders_csv)
               if config.speaker_genders_csv else {})
    return corpus, tracks, split, genders


@click.group()
@click.version_option(__version__)
def main():
    """Hierarchical emotion-intensity control for speech synthesis."""


@main.command("train-extractor")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--head", type=click.Choice(["SER", "EPR"]), default="EPR")
@click.option("--no-grl", is_flag=True, default=False)
@click.option("--adversary", type=click.Choice(["speaker", "gender"]),
              default="speaker")
@click.option("--epochs", default=60, show_default=True)
@click.option("--hidden-dim", default=256, show_default=True)
@click.option("--seed", default=None, type=int)
@_cli_errors
def train_extractor(config_path, head, no_grl, adversary, epochs, hidden_dim, seed):
    """Train the segment intensity extractor and save per-level checkpoints."""
    config = JobConfig.from_file(config_path)
    seed = config.seed if seed is None else seed
    corpus, tracks, split, genders = _corpus_pieces(config)
    sources = config.feature_sources()
    cache: dict = {}
    train_samples = pipeline.build_segment_samples(
        corpus, tracks, split.ids("train"), sources, genders, cache=cache)
    val_samples = pipeline.build_segment_samples(
        corpus, tracks, split.ids("val"), sources, genders, cache=cache)
    model_config = IntensityModelConfig(
        input_dim=train_samples[0].frame_matrix().shape[1],
        hidden_dim=hidden_dim, head_type=head, grl_enabled=not no_grl,
        adversary_target=adversary)
    model, report = train_intensity_model(
        train_samples, val_samples, model_config, seed=seed, max_epochs=epochs)
    ckpt_dir = Path(config.checkpoints_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    for level in LEVELS:
        save_intensity_model(model, ckpt_dir / f"intensity_{level}.pt")
    (ckpt_dir / "intensity_train_report.json").write_text(json.dumps({
        "selected_epoch": report.selected_epoch,
        "val_emotion_accuracy": report.val_emotion_accuracy,
        "val_adversary_accuracy": report.val_adversary_accuracy,
        "adversary_chance": report.adversary_chance,
        "post_stabilization_adversary_accuracy":
            report.post_stabilization_adversary_accuracy,
        "alpha": model.alpha,
    }, indent=2), encoding="utf-8")
    _write_manifest(ckpt_dir, config, "train-extractor", seed,
                    {"head": head, "alpha": model.alpha,
                     "selected_epoch": report.selected_epoch})
    click.echo(f"selected epoch {report.selected_epoch}, "
               f"val accuracy {report.val_emotion_accuracy[report.selected_epoch]:.3f}, "
               f"alpha {model.alpha}")


@main.command("calibrate-alpha")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@_cli_errors
def calibrate_alpha_cmd(config_path, checkpoint):
    """Re-run temperature selection on the training split."""
    config = JobConfig.from_file(config_path)
    corpus, tracks, split, genders = _corpus_pieces(config)
    model = load_intensity_model(checkpoint)
    samples = pipeline.build_segment_samples(
        corpus, tracks, split.ids("train"), config.feature_sources(), genders)
    alpha = calibrate_alpha(model, samples)
    save_intensity_model(model, checkpoint)
    _write_manifest(Path(checkpoint).parent, config, "calibrate-alpha",
                    config.seed, {"alpha": alpha})
    click.echo(f"alpha = {alpha}")


@main.command("extract-hed")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--split", "split_name",
              type=click.Choice(["train", "val", "test", "all"]), default="all")
@_cli_errors
def extract_hed_cmd(config_path, split_name):
    """Extract and cache hierarchical emotion distributions."""
    config, state = _load_state(config_path)
    if len(state.intensity_models) != len(LEVELS):
        raise click.ClickException("intensity checkpoints missing; "
                                   "run train-extractor first")
    corpus, tracks, split, _ = _corpus_pieces(config)
    if split_name == "all":
        ids = sorted(corpus.records)
    else:
        ids = split.ids(split_name)
    heds = pipeline.extract_corpus_heds(
        corpus, tracks, ids, state.intensity_models, state.sources,
        cache=state.feature_cache)
    out_dir = Path(config.cache_dir) / "hed"
    out_dir.mkdir(parents=True, exist_ok=True)
    for uid, h in heds.items():
        save_hed(h, out_dir / f"{uid}.json")
    _write_manifest(out_dir, config, "extract-hed", config.seed,
                    {"count": len(heds)})
    click.echo(f"wrote {len(heds)} distributions to {out_dir}")


@main.command("train-tts")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--steps", default=400, show_default=True)
@click.option("--d-model", default=64, show_default=True)
@click.option("--decoder-width", default=32, show_default=True)
@click.option("--seed", default=None, type=int)
@_cli_errors
def train_tts_cmd(config_path, steps, d_model, decoder_width, seed):
    """Train the flow-matching acoustic model on the training split."""
    config = JobConfig.from_file(config_path)
    seed = config.seed if seed is None else seed
    corpus, tracks, split, _ = _corpus_pieces(config)
    hed_dir = Path(config.cache_dir) / "hed"
    ids = [uid for uid in split.ids("train")
           if (hed_dir / f"{uid}.json").is_file()]
    if not ids:
        raise click.ClickException("no cached distributions; run extract-hed")
    heds = {uid: load_hed(hed_dir / f"{uid}.json") for uid in ids}
    tts_config = TTSConfig(
        phone_inventory=pipeline.phone_inventory(tracks),
        d_model=d_model, ff_dim=2 * d_model, decoder_width=decoder_width,
        speaker_dim=256)
    items = pipeline.build_tts_items(
        corpus, tracks, heds, ids, tts_config.speaker_dim,
        embeddings_dir=Path(config.speaker_embeddings_dir)
        if config.speaker_embeddings_dir else None, seed=seed)
    model, report = train_tts(items, tts_config, steps=steps, seed=seed)
    model.lexicon = pipeline.lexicon_from_tracks(tracks)
    ckpt_dir = Path(config.checkpoints_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    save_tts_model(model, ckpt_dir / "tts.pt")
    (ckpt_dir / "tts_train_report.json").write_text(json.dumps({
        "cfm_loss": report.cfm_loss, "duration_loss": report.duration_loss,
        "prior_loss": report.prior_loss}), encoding="utf-8")
    _write_manifest(ckpt_dir, config, "train-tts", seed,
                    {"steps": steps, "items": len(items),
                     "final_cfm_loss": report.cfm_loss[-1]})
    click.echo(f"trained {steps} steps on {len(items)} utterances; "
               f"final flow loss {report.cfm_loss[-1]:.4f}")


def _synthesis_request(state: ServiceState, utterance, text, hed_doc,
                       seed, ode_steps):
    record = state.corpus[utterance] if utterance else None
    if record is not None:
        track = state.tracks[utterance]
        phones = [p.symbol for p in track.phones]
        durations = [max(1, round((p.end - p.start) * 16_000 / 256))
                     for p in track.phones]
        speaker_id = record.speaker_id
    else:
        phones, durations, speaker_id = None, None, "default"
    from .tts import pseudo_speaker_embedding
    return SynthesisRequest(
        hed=hed_doc,
        speaker_embedding=pipeline.speaker_embedding_for(
            record, Path(state.config.speaker_embeddings_dir)
            if state.config.speaker_embeddings_dir else None,
            state.tts_model.config.speaker_dim)
        if record is not None
        else pseudo_speaker_embedding(speaker_id,
                                      state.tts_model.config.speaker_dim),
        phonemes=phones, text=text, durations=durations,
        n_ode_steps=ode_steps, seed=seed)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--hed", "hed_path", required=True, type=click.Path(exists=True))
@click.option("--utterance", default=None, help="Use this utterance's phonemes "
              "and alignment durations.")
@click.option("--text", default=None, help="Synthesize from text via the lexicon.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--ode-steps", default=10, show_default=True)
@_cli_errors
def synthesize(config_path, hed_path, utterance, text, out_path, seed, ode_steps):
    """Synthesize one utterance from an emotion-distribution file."""
    config, state = _load_state(config_path)
    if state.tts_model is None:
        raise click.ClickException("no acoustic checkpoint; run train-tts")
    if not utterance and not text:
        raise click.ClickException("pass --utterance or --text")
    request = _synthesis_request(state, utterance, text, load_hed(hed_path),
                                 seed, ode_steps)
    mel, audio = state.tts_model.synthesize(request)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(waveform_to_wav_bytes(audio))
    write_matrix(out_path.with_suffix(".mel.emat"),
                 utterance or "text", dsp.FRAME_RATE, mel.T)
    _write_manifest(out_path.parent, config, "synthesize", seed,
                    {"out": out_path.name, "ode_steps": ode_steps})
    click.echo(f"wrote {out_path} ({mel.shape[1]} frames)")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--utterance", required=True)
@click.option("--level", type=click.Choice(list(LEVELS)), default="utterance")
@click.option("--emotion", type=click.Choice(list(INTENSITY_EMOTIONS)),
              required=True)
@click.option("--target", default=None, type=int,
              help="Word or phoneme index for sub-utterance sweeps.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@_cli_errors
def sweep(config_path, utterance, level, emotion, target, out_dir, seed):
    """Synthesize the 6-point intensity sweep and a prosody-trend CSV."""
    from .hed import intensity_sweep
    config, state = _load_state(config_path)
    if state.tts_model is None:
        raise click.ClickException("no acoustic checkpoint; run train-tts")
    base = state.hed_for(utterance)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value, hed_doc in zip(SWEEP_VALUES,
                              intensity_sweep(base, level, emotion,
                                              SWEEP_VALUES, target)):
        request = _synthesis_request(state, utterance, None, hed_doc,
                                     seed, 10)
        _, audio = state.tts_model.synthesize(request)
        name = f"{utterance}_{emotion}_{value:.1f}.wav"
        (out_dir / name).write_bytes(waveform_to_wav_bytes(audio))
        feats = evaluation.prosodic_features(audio)
        rows.append({"value": value, "file": name, **feats})
    with open(out_dir / "trend.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    _plot_trend(rows, out_dir / "trend.png", emotion)
    _write_manifest(out_dir, config, "sweep", seed,
                    {"utterance": utterance, "level": level,
                     "emotion": emotion})
    click.echo(f"wrote {len(rows)} variants + trend.csv to {out_dir}")


def _plot_trend(rows, path, emotion):
    """Commanded intensity vs each prosodic feature, one curve per panel."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    feats = list(evaluation.PROSODY_FEATURES)
    values = [r["value"] for r in rows]
    fig, axes = plt.subplots(1, len(feats), figsize=(3 * len(feats), 2.6))
    for ax, feat in zip(axes, feats):
        ax.plot(values, [r[feat] for r in rows], marker="o")
        ax.set_title(feat, fontsize=9)
        ax.set_xlabel(f"{emotion} intensity", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--max-utterances", default=12, show_default=True,
              help="Cap on test utterances per section to bound runtime.")
@click.option("--seed", default=0, show_default=True)
@_cli_errors
def evaluate(config_path, out_path, max_utterances, seed):
    """Objective reports: resynthesis distortions and speaker leakage."""
    from .corpus import load_audio
    config, state = _load_state(config_path)
    corpus, tracks, split, _ = _corpus_pieces(config)
    report: dict = {"seed": seed}

    # Round-robin across cells, alternating speakers first, so small caps
    # still cover several speakers.
    cells = [list(ids) for _, ids in sorted(split.test.items(),
                                            key=lambda kv: (kv[0][1], kv[0][0]))]
    test_ids = []
    while len(test_ids) < max_utterances and any(cells):
        for cell in cells:
            if cell and len(test_ids) < max_utterances:
                test_ids.append(cell.pop(0))
    if state.tts_model is not None:
        pairs = []
        for uid in test_ids:
            base = state.hed_for(uid)
            request = _synthesis_request(state, uid, None, base, seed, 10)
            _, audio = state.tts_model.synthesize(request)
            pairs.append((load_audio(corpus[uid]), audio))
        metric = evaluation.pairwise_metric_report(pairs)
        report["resynthesis"] = metric.to_document()

    if len(state.intensity_models) == len(LEVELS):
        heds = pipeline.extract_corpus_heds(
            corpus, tracks, test_ids, state.intensity_models, state.sources,
            cache=state.feature_cache)
        codes = np.concatenate([h.matrix for h in heds.values()], axis=0)
        factors = np.concatenate([
            [corpus[uid].speaker_id] * heds[uid].n_phones for uid in heds])
        if len(set(factors.tolist())) >= 2:
            bins = min(30, max(2, codes.shape[0] // 4))
            report["leakage"] = {
                "mig": {str(bins): evaluation.mig(codes, factors, bins)},
                "codes": int(codes.shape[0]),
            }
        else:
            report["leakage"] = {"skipped": "single speaker in selection"}
    (Path(out_path).parent or Path(".")).mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(json.dumps(report, indent=2), encoding="utf-8")
    _write_manifest(Path(out_path).parent, config, "evaluate", seed,
                    {"out": Path(out_path).name})
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--plots/--no-plots", default=True, show_default=True)
@_cli_errors
def report(in_path, out_dir, plots):
    """Render an evaluate JSON into CSV tables (and PNG curves)."""
    doc = json.loads(Path(in_path).read_text(encoding="utf-8"))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for section, payload in doc.items():
        if not isinstance(payload, dict):
            continue
        flat = _flatten(payload)
        with open(out_dir / f"{section}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value"])
            writer.writerows(sorted(flat.items()))
    if plots and "resynthesis" in doc:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        keys = [k for k in ("mcd", "pitch_distortion", "energy_distortion")
                if doc["resynthesis"].get(k) is not None]
        values = [doc["resynthesis"][k] for k in keys]
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.bar(keys, values)
        ax.set_ylabel("distortion")
        fig.tight_layout()
        fig.savefig(out_dir / "resynthesis.png", dpi=120)
        plt.close(fig)
    import hashlib as _hashlib
    (out_dir / "manifest.json").write_text(json.dumps({
        "command": "report",
        "input_sha256": _hashlib.sha256(
            Path(in_path).read_bytes()).hexdigest(),
        "versions": {"emotts": __version__},
    }, indent=2), encoding="utf-8")
    click.echo(f"wrote tables to {out_dir}")


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (int, float, str)) or v is None:
            out[key] = v
    return out


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8077, show_default=True)
@_cli_errors
def serve(config_path, host, port):
    """Run the HTTP API."""
    import uvicorn
    config, state = _load_state(config_path)
    uvicorn.run(build_app(state), host=host, port=port, log_level="warning")


@main.command("demo-init")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--speakers", default=2, show_default=True)
@click.option("--utterances-per-cell", default=6, show_default=True)
@click.option("--intensity-epochs", default=15, show_default=True)
@click.option("--tts-steps", default=150, show_default=True)
@_cli_errors
def demo_init(out_dir, seed, speakers, utterances_per_cell, intensity_epochs,
              tts_steps):
    """Generate a toy corpus, train small models, and cache distributions."""
    from click.testing import CliRunner
    out_dir = Path(out_dir)
    toydata.generate_toy_corpus(out_dir, n_speakers=speakers,
                                utterances_per_cell=utterances_per_cell,
                                seed=seed)
    config_path = str(out_dir / "config.json")
    runner = CliRunner()
    steps = [
        (train_extractor, ["--config", config_path, "--head", "EPR",
                           "--epochs", str(intensity_epochs),
                           "--seed", str(seed)]),
        (extract_hed_cmd, ["--config", config_path]),
        (train_tts_cmd, ["--config", config_path, "--steps", str(tts_steps),
                         "--seed", str(seed)]),
    ]
    for cmd, args in steps:
        result = runner.invoke(cmd, args, catch_exceptions=False)
        if result.exit_code != 0:
            raise click.ClickException(result.output)
        click.echo(result.output.rstrip())
    click.echo(f"demo workspace ready at {out_dir}; "
               f"serve with: emotts serve --config {config_path}")


if __name__ == "__main__":
    main()
