"""Hierarchical emotion distributions: per-phoneme 12-dim intensity stacks.

Each row stacks the phoneme-, word-, and utterance-level intensities of one
phone; column layout is ``[phoneme | word | utterance] x (Angry, Happy, Sad,
Surprise)``. The word block repeats across phones of the same word and the
utterance block repeats across all rows, which makes block consistency a
machine-checkable invariant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .containers import CorruptPayload, SchemaVersionMismatch
from .corpus import AlignmentTrack, INTENSITY_EMOTIONS, slice_segments
from .dsp import FrameFeatures, compute_segment_functionals, frames_in_span
from .intensity import IntensityModel, forward_intensity

HED_VERSION = 1
HED_DIM = 12

LEVELS = ("phoneme", "word", "utterance")
LEVEL_OFFSETS = {"phoneme": 0, "word": 4, "utterance": 8}

SWEEP_VALUES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


class HedError(Exception):
    pass


class AlignmentMismatch(HedError):
    pass


class MissingModel(HedError):
    pass


class IndexOutOfRange(HedError):
    pass


class InvalidValue(HedError):
    pass


@dataclass(frozen=True)
class HierarchicalED:
    utterance_id: str
    phone_symbols: tuple[str, ...]
    word_index: tuple[int, ...]
    matrix: np.ndarray  # (n_phones, 12) float32, entries in [0, 1]
    provenance: str = "extracted"  # extracted | edited | manual

    @property
    def n_phones(self) -> int:
        return self.matrix.shape[0]

    def column(self, level: str, emotion: str) -> int:
        return LEVEL_OFFSETS[level] + INTENSITY_EMOTIONS.index(emotion)

    def level_block(self, level: str) -> np.ndarray:
        off = LEVEL_OFFSETS[level]
        return self.matrix[:, off:off + 4]


def validate_hed(hed: HierarchicalED) -> None:
    m = hed.matrix
    if m.shape != (len(hed.phone_symbols), HED_DIM):
        raise HedError(f"matrix shape {m.shape} does not match "
                       f"{len(hed.phone_symbols)} phones x {HED_DIM}")
    if len(hed.word_index) != len(hed.phone_symbols):
        raise HedError("word_index length does not match phone count")
    if not np.all(np.isfinite(m)) or m.min() < 0.0 or m.max() > 1.0:
        raise HedError("entries must be finite and within [0, 1]")
    utt = hed.level_block("utterance")
    if not np.all(utt == utt[0]):
        raise HedError("utterance block differs across rows")
    word = hed.level_block("word")
    for wi in set(hed.word_index):
        rows = word[np.asarray(hed.word_index) == wi]
        if not np.all(rows == rows[0]):
            raise HedError(f"word block differs across phones of word {wi}")


def _segment_vector(model: IntensityModel, ff: FrameFeatures,
                    span, provider: str) -> np.ndarray:
    start, end = span.start, span.end
    if provider == "functionals":
        idx = frames_in_span(ff, start, end)
        if idx.size == 0:
            start, end = _nearest_frame_window(ff, start, end)
        return forward_intensity(
            model, compute_segment_functionals(ff, start, end))
    idx = frames_in_span(ff, start, end)
    if idx.size == 0:
        start, end = _nearest_frame_window(ff, start, end)
        idx = frames_in_span(ff, start, end)
    return forward_intensity(model, ff.matrix[idx])


def _nearest_frame_window(ff: FrameFeatures, start: float, end: float):
    # Very short phones can miss every frame center; fall back to the
    # nearest frame so each segment still gets an intensity.
    center = 0.5 * (start + end)
    i = int(np.clip(round(center * ff.frame_rate), 0, ff.n_frames - 1))
    t = i / ff.frame_rate
    return t, t + 0.5 / ff.frame_rate


def extract_hed(models: Mapping[str, IntensityModel],
                utterance_id: str,
                track: AlignmentTrack,
                features: Mapping[str, FrameFeatures],
                providers: Mapping[str, str] | None = None,
                exclude_silence: bool = True) -> HierarchicalED:
    """Run the per-level extractors over one aligned utterance.

    ``models`` and ``features`` map level names to the extractor and its
    feature track; ``providers`` selects per level how a segment becomes a
    model input: ``"frames"`` (per-frame extraction, mean-pooled) or
    ``"functionals"`` (88-dim statistics vector). Different levels may use
    different feature tracks, e.g. external embeddings for utterances and
    built-in functionals for words and phonemes.
    """
    providers = dict(providers or {})
    missing = [level for level in LEVELS if level not in models]
    if missing:
        raise MissingModel(f"no intensity model for levels {missing}")
    for level in LEVELS:
        if level not in features:
            raise AlignmentMismatch(f"no features for level {level!r}")
        providers.setdefault(level, "functionals")

    slices = slice_segments(track, exclude_silence=exclude_silence)
    duration = slices.utterance.end
    for level in LEVELS:
        ff = features[level]
        covered = ff.n_frames / ff.frame_rate
        if duration > covered + 2.0 / ff.frame_rate:
            raise AlignmentMismatch(
                f"{utterance_id}: {level} features cover {covered:.2f}s, "
                f"alignment ends at {duration:.2f}s")

    utt_ed = _segment_vector(models["utterance"], features["utterance"],
                             slices.utterance, providers["utterance"])
    word_eds = [_segment_vector(models["word"], features["word"], span,
                                providers["word"])
                for span in slices.words]
    phone_eds = [_segment_vector(models["phoneme"], features["phoneme"], span,
                                 providers["phoneme"])
                 for span in slices.phones]

    n = len(track.phones)
    matrix = np.zeros((n, HED_DIM), dtype=np.float32)
    for i, phone in enumerate(track.phones):
        matrix[i, 0:4] = phone_eds[i]
        matrix[i, 4:8] = word_eds[phone.word_index]
        matrix[i, 8:12] = utt_ed
    hed = HierarchicalED(
        utterance_id=utterance_id,
        phone_symbols=tuple(p.symbol for p in track.phones),
        word_index=tuple(p.word_index for p in track.phones),
        matrix=np.clip(matrix, 0.0, 1.0),
        provenance="extracted")
    validate_hed(hed)
    return hed


@dataclass(frozen=True)
class EDEdit:
    """One edit: set or scale a (level, emotion) block of the distribution."""

    level: str              # "phoneme" | "word" | "utterance"
    emotion: str            # Angry | Happy | Sad | Surprise
    mode: str               # "set" | "scale"
    value: float
    target: int | tuple[int, int] | None = None  # index or [start, stop)

    def __post_init__(self):
        if self.level not in LEVELS:
            raise InvalidValue(f"unknown level {self.level!r}")
        if self.emotion not in INTENSITY_EMOTIONS:
            raise InvalidValue(f"unknown emotion {self.emotion!r}")
        if self.mode not in ("set", "scale"):
            raise InvalidValue(f"unknown mode {self.mode!r}")
        if self.mode == "set" and not (0.0 <= self.value <= 1.0):
            raise InvalidValue(f"set value {self.value} outside [0, 1]")
        if self.mode == "scale" and self.value < 0.0:
            raise InvalidValue(f"scale value {self.value} must be >= 0")


def _target_rows(hed: HierarchicalED, edit: EDEdit) -> np.ndarray:
    n = hed.n_phones
    word_index = np.asarray(hed.word_index)
    if edit.level == "utterance":
        return np.ones(n, dtype=bool)
    if edit.target is None:
        raise IndexOutOfRange(f"{edit.level} edit requires a target")
    if isinstance(edit.target, (tuple, list)):
        lo, hi = int(edit.target[0]), int(edit.target[1])
    else:
        lo, hi = int(edit.target), int(edit.target) + 1
    bound = n if edit.level == "phoneme" else int(word_index.max()) + 1
    if not (0 <= lo < hi <= bound):
        raise IndexOutOfRange(
            f"{edit.level} target [{lo}, {hi}) outside [0, {bound})")
    if edit.level == "phoneme":
        rows = np.zeros(n, dtype=bool)
        rows[lo:hi] = True
        return rows
    return (word_index >= lo) & (word_index < hi)


def apply_edit(hed: HierarchicalED, edit: EDEdit) -> HierarchicalED:
    """Return a new distribution with one (level, emotion) block changed.

    Word and utterance edits fan out to all member rows so the block
    consistency invariants keep holding; results clamp to [0, 1].
    """
    rows = _target_rows(hed, edit)
    col = hed.column(edit.level, edit.emotion)
    matrix = hed.matrix.copy()
    if edit.mode == "set":
        matrix[rows, col] = np.float32(edit.value)
    else:
        matrix[rows, col] = np.clip(
            matrix[rows, col] * np.float32(edit.value), 0.0, 1.0)
    return replace(hed, matrix=matrix, provenance="edited")


def intensity_sweep(hed: HierarchicalED, level: str, emotion: str,
                    values: Sequence[float] = SWEEP_VALUES,
                    target=None) -> list[HierarchicalED]:
    """One edited distribution per value; everything else stays untouched."""
    for v in values:
        if not (0.0 <= v <= 1.0):
            raise InvalidValue(f"sweep value {v} outside [0, 1]")
    return [apply_edit(hed, EDEdit(level=level, emotion=emotion, mode="set",
                                   value=v, target=target))
            for v in values]


def serialize_hed(hed: HierarchicalED) -> str:
    doc = {
        "version": HED_VERSION,
        "utterance_id": hed.utterance_id,
        "emotions": list(INTENSITY_EMOTIONS),
        "levels": list(LEVELS),
        "provenance": hed.provenance,
        "phones": list(hed.phone_symbols),
        "word_index": list(hed.word_index),
        "matrix": [[float(x) for x in row]
                   for row in hed.matrix.astype(np.float32)],
    }
    return json.dumps(doc)


def deserialize_hed(document: str | bytes) -> HierarchicalED:
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptPayload(f"unreadable distribution document: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise CorruptPayload("document has no version field")
    if doc["version"] != HED_VERSION:
        raise SchemaVersionMismatch(
            f"document version {doc['version']}, reader supports {HED_VERSION}")
    try:
        hed = HierarchicalED(
            utterance_id=str(doc["utterance_id"]),
            phone_symbols=tuple(doc["phones"]),
            word_index=tuple(int(i) for i in doc["word_index"]),
            matrix=np.asarray(doc["matrix"], dtype=np.float32),
            provenance=str(doc.get("provenance", "extracted")))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptPayload(f"malformed distribution document: {exc}") from exc
    validate_hed(hed)
    return hed


def load_hed(path: str | Path) -> HierarchicalED:
    return deserialize_hed(Path(path).read_text(encoding="utf-8"))


def save_hed(hed: HierarchicalED, path: str | Path) -> None:
    Path(path).write_text(serialize_hed(hed), encoding="utf-8")


def manual_hed(utterance_id: str, phone_symbols: Sequence[str],
               word_index: Sequence[int],
               fill: float = 0.0) -> HierarchicalED:
    """A constant-valued distribution, e.g. as an editing baseline."""
    matrix = np.full((len(phone_symbols), HED_DIM), np.float32(fill),
                     dtype=np.float32)
    hed = HierarchicalED(utterance_id=utterance_id,
                         phone_symbols=tuple(phone_symbols),
                         word_index=tuple(int(i) for i in word_index),
                         matrix=matrix, provenance="manual")
    validate_hed(hed)
    return hed
