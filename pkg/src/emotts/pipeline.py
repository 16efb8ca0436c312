"""Plumbing between the corpus and the trainable pieces: feature tracks,
segment sample assembly, HED extraction over a corpus, and TTS training-item
preparation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import dsp
from .containers import read_matrix
from .corpus import (AlignmentTrack, CorpusIndex, UtteranceRecord,
                     load_audio, parse_alignment, slice_segments)
from .hed import LEVELS, HierarchicalED, extract_hed
from .intensity import IntensityModel, SegmentSample
from .tts import TTSTrainingItem, alignment_frame_target, pseudo_speaker_embedding

log = logging.getLogger(__name__)


def load_alignments(alignments_dir: str | Path,
                    ids: Sequence[str] | None = None) -> dict[str, AlignmentTrack]:
    alignments_dir = Path(alignments_dir)
    tracks = {}
    paths = ([alignments_dir / f"{uid}.json" for uid in ids] if ids is not None
             else sorted(alignments_dir.glob("*.json")))
    for path in paths:
        track = parse_alignment(path)
        tracks[track.utterance_id] = track
    return tracks


@dataclass
class FeatureSource:
    """Per-level feature configuration.

    ``provider`` is "functionals" (88-dim statistics of the built-in frame
    features) or "frames" (raw per-frame vectors); ``external_dir`` replaces
    the built-in frame track with ingested embedding files named
    ``<utterance_id>.emat``.
    """
    provider: str = "functionals"
    external_dir: Path | None = None


def default_feature_sources() -> dict[str, FeatureSource]:
    return {level: FeatureSource() for level in LEVELS}


def feature_track(record: UtteranceRecord, source: FeatureSource,
                  cache: dict | None = None) -> dsp.FrameFeatures:
    """The frame-level feature matrix a level's extractor consumes."""
    if source.external_dir is not None:
        mat = read_matrix(Path(source.external_dir) / f"{record.id}.emat")
        return dsp.FrameFeatures(matrix=mat.matrix.astype(np.float64),
                                 frame_rate=mat.frame_rate, provider="external")
    key = ("builtin", record.id)
    if cache is not None and key in cache:
        return cache[key]
    ff = dsp.compute_frame_features(load_audio(record))
    if cache is not None:
        cache[key] = ff
    return ff


def _segment_features(ff: dsp.FrameFeatures, span, provider: str) -> np.ndarray:
    if provider == "functionals":
        return dsp.compute_segment_functionals(ff, span.start, span.end)
    idx = dsp.frames_in_span(ff, span.start, span.end)
    if idx.size == 0:
        raise dsp.EmptySegment(
            f"no frames inside [{span.start:.3f}, {span.end:.3f})")
    return ff.matrix[idx]


def build_segment_samples(corpus: CorpusIndex,
                          tracks: Mapping[str, AlignmentTrack],
                          ids: Sequence[str],
                          sources: Mapping[str, FeatureSource],
                          genders: Mapping[str, str] | None = None,
                          levels: Sequence[str] = LEVELS,
                          cache: dict | None = None) -> list[SegmentSample]:
    """Mixed utterance/word/phoneme segments for intensity training."""
    genders = genders or {}
    samples: list[SegmentSample] = []
    cache = cache if cache is not None else {}
    for uid in ids:
        record = corpus[uid]
        track = tracks[uid]
        slices = slice_segments(track, exclude_silence=True)
        for level in levels:
            ff = feature_track(record, sources[level], cache)
            spans = {"utterance": [slices.utterance],
                     "word": list(slices.words),
                     "phoneme": list(slices.phones)}[level]
            for span in spans:
                try:
                    feats = _segment_features(ff, span, sources[level].provider)
                except dsp.EmptySegment:
                    log.debug("%s: %s segment at %.3fs too short, skipped",
                              uid, level, span.start)
                    continue
                samples.append(SegmentSample(
                    features=feats, emotion=record.emotion_label, level=level,
                    speaker=record.speaker_id,
                    gender=genders.get(record.speaker_id, "unknown")))
    return samples


def extract_corpus_heds(corpus: CorpusIndex,
                        tracks: Mapping[str, AlignmentTrack],
                        ids: Sequence[str],
                        models: Mapping[str, IntensityModel],
                        sources: Mapping[str, FeatureSource],
                        cache: dict | None = None) -> dict[str, HierarchicalED]:
    heds = {}
    cache = cache if cache is not None else {}
    for uid in ids:
        record = corpus[uid]
        features = {level: feature_track(record, sources[level], cache)
                    for level in LEVELS}
        providers = {level: sources[level].provider for level in LEVELS}
        heds[uid] = extract_hed(models, uid, tracks[uid], features,
                                providers=providers)
    return heds


def phone_inventory(tracks: Mapping[str, AlignmentTrack]) -> tuple[str, ...]:
    symbols = {p.symbol for track in tracks.values() for p in track.phones}
    return tuple(sorted(symbols))


def lexicon_from_tracks(tracks: Mapping[str, AlignmentTrack]) -> dict[str, list[str]]:
    """word -> phoneme list, taken from the first occurrence of each word."""
    lex: dict[str, list[str]] = {}
    for track in tracks.values():
        for wi, word in enumerate(track.words):
            key = word.text.lower()
            if key in lex:
                continue
            phones = [p.symbol for p in track.phones
                      if p.word_index == wi and not p.is_silence]
            if phones:
                lex[key] = phones
    return lex


def speaker_embedding_for(record: UtteranceRecord,
                          embeddings_dir: Path | None,
                          dim: int,
                          donor_id: str | None = None) -> np.ndarray:
    """Per-utterance embedding from files, else a deterministic pseudo one.

    ``donor_id`` lets the caller source the embedding from a different
    utterance of the same speaker.
    """
    if embeddings_dir is not None:
        uid = donor_id or record.id
        return read_matrix(Path(embeddings_dir) / f"{uid}.emat").matrix[0]
    return pseudo_speaker_embedding(record.speaker_id, dim)


def build_tts_items(corpus: CorpusIndex,
                    tracks: Mapping[str, AlignmentTrack],
                    heds: Mapping[str, HierarchicalED],
                    ids: Sequence[str],
                    speaker_dim: int,
                    embeddings_dir: Path | None = None,
                    speaker_policy: str = "other_utterance",
                    seed: int = 0) -> list[TTSTrainingItem]:
    """Training items with alignment durations and per-utterance targets.

    With ``speaker_policy="other_utterance"`` the speaker embedding comes
    from a different utterance of the same speaker, which discourages the
    decoder from reading speaker identity out of the emotion conditioning.
    """
    rng = np.random.default_rng(seed)
    by_speaker: dict[str, list[str]] = {}
    for uid in ids:
        by_speaker.setdefault(corpus[uid].speaker_id, []).append(uid)
    items = []
    for uid in ids:
        record = corpus[uid]
        track = tracks[uid]
        donor = None
        if speaker_policy == "other_utterance" and embeddings_dir is not None:
            pool = [x for x in by_speaker[record.speaker_id] if x != uid]
            donor = str(rng.choice(pool)) if pool else None
        mel = dsp.compute_mel(load_audio(record)).matrix.astype(np.float32)
        durations = [alignment_frame_target(p.end - p.start)
                     for p in track.phones]
        items.append(TTSTrainingItem(
            phonemes=[p.symbol for p in track.phones],
            durations=durations,
            mel=mel,
            hed_matrix=np.asarray(heds[uid].matrix, dtype=np.float32),
            speaker_embedding=speaker_embedding_for(
                record, embeddings_dir, speaker_dim, donor)))
    return items
