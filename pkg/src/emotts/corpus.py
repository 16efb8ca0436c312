"""Corpus ingestion: utterance records, alignment tracks, splits, embeddings.

Supports two on-disk layouts: a manifest CSV (``id,speaker,emotion,text,
audio_relpath``) or an ESD-style tree ``root/<speaker>/<emotion>/<id>.wav``
with a per-speaker transcript file ``root/<speaker>/<speaker>.txt`` holding
tab-separated ``id<TAB>text<TAB>emotion`` lines.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .containers import MatrixFile, read_matrix, write_matrix

log = logging.getLogger(__name__)

TARGET_SAMPLE_RATE = 16_000

EMOTION_LABELS = ("Neutral", "Angry", "Happy", "Sad", "Surprise")
# Label order for intensity vectors; Neutral carries no intensity channel.
INTENSITY_EMOTIONS = ("Angry", "Happy", "Sad", "Surprise")

SILENCE_SYMBOLS = frozenset({"SIL", "SP", "SPN", ""})

# Split quotas for a full-size cell (one speaker x one emotion).
FULL_CELL_QUOTAS = (300, 20, 30)
FULL_CELL_SIZE = sum(FULL_CELL_QUOTAS)

WORD_SPAN_TOLERANCE = 0.010  # seconds


class CorpusError(Exception):
    """Base error for corpus ingestion."""


class MissingAudio(CorpusError):
    pass


class MissingTranscript(CorpusError):
    pass


class BadSampleRate(CorpusError):
    pass


class DuplicateId(CorpusError):
    pass


class OverlappingIntervals(CorpusError):
    pass


class NonMonotonic(CorpusError):
    pass


class OrphanPhone(CorpusError):
    pass


class WordSpanMismatch(CorpusError):
    pass


class EmptyTrack(CorpusError):
    pass


class InsufficientData(CorpusError):
    pass


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    speaker_id: str
    emotion_label: str
    text: str
    audio_path: Path
    sample_rate: int = TARGET_SAMPLE_RATE
    native_rate: int = TARGET_SAMPLE_RATE  # rate on disk; resampled on load

    def __post_init__(self):
        if self.emotion_label not in EMOTION_LABELS:
            raise CorpusError(f"{self.id}: unknown emotion {self.emotion_label!r}")


@dataclass(frozen=True)
class Phone:
    symbol: str
    start: float
    end: float
    word_index: int

    @property
    def is_silence(self) -> bool:
        return self.symbol in SILENCE_SYMBOLS


@dataclass(frozen=True)
class Word:
    text: str
    start: float
    end: float


@dataclass(frozen=True)
class AlignmentTrack:
    utterance_id: str
    phones: tuple[Phone, ...]
    words: tuple[Word, ...]


@dataclass(frozen=True)
class Span:
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class SegmentSlices:
    utterance: Span
    words: tuple[Span, ...]
    phones: tuple[Span, ...]


@dataclass
class DatasetSplit:
    """Disjoint train/val/test utterance ids per (speaker, emotion) cell."""

    train: dict[tuple[str, str], list[str]] = field(default_factory=dict)
    val: dict[tuple[str, str], list[str]] = field(default_factory=dict)
    test: dict[tuple[str, str], list[str]] = field(default_factory=dict)

    def part(self, name: str) -> dict[tuple[str, str], list[str]]:
        return {"train": self.train, "val": self.val, "test": self.test}[name]

    def ids(self, name: str) -> list[str]:
        return [uid for cell in sorted(self.part(name)) for uid in self.part(name)[cell]]

    def to_document(self) -> dict:
        def enc(d):
            return {f"{spk}|{emo}": ids for (spk, emo), ids in sorted(d.items())}
        return {"train": enc(self.train), "val": enc(self.val), "test": enc(self.test)}

    @classmethod
    def from_document(cls, doc: Mapping) -> "DatasetSplit":
        def dec(d):
            out = {}
            for key, ids in d.items():
                spk, emo = key.split("|", 1)
                out[(spk, emo)] = list(ids)
            return out
        return cls(train=dec(doc["train"]), val=dec(doc["val"]), test=dec(doc["test"]))


@dataclass(frozen=True)
class CorpusIndex:
    root: Path
    records: dict[str, UtteranceRecord]
    resample: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, utterance_id: str) -> UtteranceRecord:
        return self.records[utterance_id]

    def __contains__(self, utterance_id: str) -> bool:
        return utterance_id in self.records

    def groups(self) -> dict[tuple[str, str], list[str]]:
        """Utterance ids per (speaker, emotion), sorted deterministically."""
        out: dict[tuple[str, str], list[str]] = {}
        for uid in sorted(self.records):
            rec = self.records[uid]
            out.setdefault((rec.speaker_id, rec.emotion_label), []).append(uid)
        return out

    def speakers(self) -> list[str]:
        return sorted({rec.speaker_id for rec in self.records.values()})


def load_audio(record: UtteranceRecord) -> np.ndarray:
    """Decode a record's audio as mono float64 at 16 kHz."""
    rate, data = wavfile.read(record.audio_path)
    wave = _to_float_mono(data)
    if rate != TARGET_SAMPLE_RATE:
        wave = resample_poly(wave, TARGET_SAMPLE_RATE, rate)
    return wave


def _to_float_mono(data: np.ndarray) -> np.ndarray:
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        scale = float(np.iinfo(data.dtype).max)
        return data.astype(np.float64) / scale
    return data.astype(np.float64)


def _wav_properties(path: Path) -> tuple[int, int]:
    """(sample_rate, n_samples) without keeping the payload around."""
    try:
        rate, data = wavfile.read(path)
    except (FileNotFoundError, ValueError) as exc:
        raise MissingAudio(f"cannot decode {path}: {exc}") from exc
    return rate, int(data.shape[0])


def load_corpus(root: str | Path, manifest: str | Path | None = None,
                resample: bool = False) -> CorpusIndex:
    """Index an emotional speech corpus rooted at ``root``.

    Audio whose native rate is not 16 kHz is rejected with
    :class:`BadSampleRate` unless ``resample`` is set, in which case it is
    resampled on every :func:`load_audio` call.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"corpus root {root} does not exist")
    rows = (_rows_from_manifest(root, Path(manifest)) if manifest is not None
            else _rows_from_esd_tree(root))

    records: dict[str, UtteranceRecord] = {}
    for uid, speaker, emotion, text, audio_path in rows:
        if uid in records:
            raise DuplicateId(f"utterance id {uid!r} occurs more than once")
        if not audio_path.is_file():
            raise MissingAudio(f"{uid}: audio file {audio_path} not found")
        rate, n_samples = _wav_properties(audio_path)
        if n_samples <= 0:
            raise MissingAudio(f"{uid}: audio file {audio_path} is empty")
        if rate != TARGET_SAMPLE_RATE and not resample:
            raise BadSampleRate(
                f"{uid}: {rate} Hz audio; expected {TARGET_SAMPLE_RATE} Hz "
                "(pass resample=True to convert on load)")
        records[uid] = UtteranceRecord(
            id=uid, speaker_id=speaker, emotion_label=emotion, text=text,
            audio_path=audio_path, sample_rate=TARGET_SAMPLE_RATE,
            native_rate=rate)
    if not records:
        log.warning("corpus root %s produced an empty index", root)
    return CorpusIndex(root=root, records=records, resample=resample)


def _rows_from_manifest(root: Path, manifest: Path):
    with open(manifest, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            yield (row["id"], row["speaker"], row["emotion"], row["text"],
                   root / row["audio_relpath"])


def _rows_from_esd_tree(root: Path):
    for speaker_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        speaker = speaker_dir.name
        transcripts = _speaker_transcripts(speaker_dir)
        for emotion_dir in sorted(p for p in speaker_dir.iterdir() if p.is_dir()):
            emotion = emotion_dir.name
            if emotion not in EMOTION_LABELS:
                continue
            for wav in sorted(emotion_dir.glob("*.wav")):
                uid = wav.stem
                if uid not in transcripts:
                    raise MissingTranscript(f"{uid}: no transcript line for {wav}")
                yield uid, speaker, emotion, transcripts[uid], wav


def _speaker_transcripts(speaker_dir: Path) -> dict[str, str]:
    txt = speaker_dir / f"{speaker_dir.name}.txt"
    if not txt.is_file():
        raise MissingTranscript(f"transcript file {txt} not found")
    out = {}
    for line in txt.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        out[parts[0].strip()] = parts[1].strip() if len(parts) > 1 else ""
    return out


# --- alignment ---------------------------------------------------------------

def parse_alignment(file: str | Path) -> AlignmentTrack:
    """Parse and validate one alignment JSON document."""
    with open(file, encoding="utf-8") as fh:
        doc = json.load(fh)
    return alignment_from_document(doc)


def alignment_from_document(doc: Mapping) -> AlignmentTrack:
    words = tuple(Word(text=w["text"], start=float(w["start"]), end=float(w["end"]))
                  for w in doc["words"])
    phones = tuple(Phone(symbol=str(p["symbol"]).upper(), start=float(p["start"]),
                         end=float(p["end"]), word_index=int(p["word_index"]))
                   for p in doc["phones"])
    track = AlignmentTrack(utterance_id=str(doc["utterance_id"]),
                           phones=phones, words=words)
    validate_track(track)
    return track


def validate_track(track: AlignmentTrack) -> None:
    uid = track.utterance_id
    for p in track.phones:
        if p.end <= p.start:
            raise NonMonotonic(f"{uid}: phone {p.symbol} has end <= start")
        if not (0 <= p.word_index < len(track.words)):
            raise OrphanPhone(
                f"{uid}: phone {p.symbol} addresses word {p.word_index} "
                f"of {len(track.words)}")
    for prev, cur in zip(track.phones, track.phones[1:]):
        if cur.start < prev.start:
            raise NonMonotonic(f"{uid}: phone starts not increasing at {cur.symbol}")
        if cur.start < prev.end - 1e-9:
            raise OverlappingIntervals(
                f"{uid}: phones {prev.symbol} and {cur.symbol} overlap")
    # Silence phones may sit outside the lexical word they are attached to,
    # so the containment check covers lexical phones only.
    for wi, word in enumerate(track.words):
        member = [p for p in track.phones if p.word_index == wi and not p.is_silence]
        if not member:
            continue
        lo, hi = min(p.start for p in member), max(p.end for p in member)
        if lo < word.start - WORD_SPAN_TOLERANCE or hi > word.end + WORD_SPAN_TOLERANCE:
            raise WordSpanMismatch(
                f"{uid}: phones of word {wi} ({word.text!r}) span "
                f"[{lo:.3f},{hi:.3f}] outside [{word.start:.3f},{word.end:.3f}]")


def alignment_to_document(track: AlignmentTrack) -> dict:
    return {
        "utterance_id": track.utterance_id,
        "words": [{"text": w.text, "start": w.start, "end": w.end}
                  for w in track.words],
        "phones": [{"symbol": p.symbol, "start": p.start, "end": p.end,
                    "word_index": p.word_index} for p in track.phones],
    }


def canonical_alignment_document(doc: Mapping) -> dict:
    """The document as :func:`alignment_to_document` would re-emit it."""
    return alignment_to_document(alignment_from_document(doc))


def slice_segments(track: AlignmentTrack,
                   exclude_silence: bool = False) -> SegmentSlices:
    """Cut one utterance into utterance/word/phone time spans.

    With ``exclude_silence`` the word spans drop leading/trailing silence
    phones; the utterance span and phone list always keep them.
    """
    if not track.phones:
        raise EmptyTrack(f"{track.utterance_id}: no phones")
    utterance = Span(track.phones[0].start, track.phones[-1].end)
    phones = tuple(Span(p.start, p.end) for p in track.phones)
    words = []
    for wi, word in enumerate(track.words):
        member = [p for p in track.phones if p.word_index == wi]
        if exclude_silence:
            lexical = [p for p in member if not p.is_silence]
            member = lexical or member
        if member:
            words.append(Span(min(p.start for p in member),
                              max(p.end for p in member)))
        else:
            words.append(Span(word.start, word.end))
    return SegmentSlices(utterance=utterance, words=tuple(words), phones=phones)


# --- splits -------------------------------------------------------------------

def split_dataset(index: CorpusIndex, seed: int) -> DatasetSplit:
    """Deterministic per-(speaker, emotion) train/val/test assignment.

    Full-size cells (>= 350 utterances) get the 300/20/30 quotas; smaller
    cells are scaled proportionally (floor + largest remainder). Cells with
    fewer than 3 utterances raise :class:`InsufficientData`.
    """
    if len(index) == 0:
        raise CorpusError("cannot split an empty corpus index")
    rng = np.random.default_rng(seed)
    split = DatasetSplit()
    for cell, ids in sorted(index.groups().items()):
        n = len(ids)
        if n < 3:
            raise InsufficientData(
                f"cell {cell} has {n} utterances; at least 3 required")
        order = list(np.array(sorted(ids))[rng.permutation(n)])
        counts = _cell_counts(n)
        a, b = counts[0], counts[0] + counts[1]
        split.train[cell] = sorted(order[:a])
        split.val[cell] = sorted(order[a:b])
        split.test[cell] = sorted(order[b:b + counts[2]])
    return split


def _cell_counts(n: int) -> tuple[int, int, int]:
    if n >= FULL_CELL_SIZE:
        if n > FULL_CELL_SIZE:
            log.warning("cell has %d utterances; only %d are assigned",
                        n, FULL_CELL_SIZE)
        return FULL_CELL_QUOTAS
    raw = [q * n / FULL_CELL_SIZE for q in FULL_CELL_QUOTAS]
    counts = [int(x) for x in raw]
    # Guarantee one utterance per part, then hand out remainders by size.
    for i in range(3):
        if counts[i] == 0:
            counts[i] = 1
    while sum(counts) > n:
        counts[counts.index(max(counts))] -= 1
    remainders = sorted(range(3), key=lambda i: raw[i] - int(raw[i]), reverse=True)
    k = 0
    while sum(counts) < n:
        counts[remainders[k % 3]] += 1
        k += 1
    return counts[0], counts[1], counts[2]


# --- external embeddings ------------------------------------------------------

def load_external_embedding(path: str | Path) -> MatrixFile:
    return read_matrix(path)


def save_external_embedding(path: str | Path, utterance_id: str,
                            frame_rate: float, matrix: np.ndarray) -> None:
    write_matrix(path, utterance_id, frame_rate, matrix)


def validate_embedding(emb: MatrixFile, audio_duration: float,
                       tolerance_frames: int = 2) -> None:
    expected = audio_duration * emb.frame_rate
    if abs(emb.matrix.shape[0] - expected) > tolerance_frames:
        raise CorpusError(
            f"{emb.utterance_id}: {emb.matrix.shape[0]} frames, expected "
            f"~{expected:.1f} at {emb.frame_rate} Hz")


def load_speaker_genders(path: str | Path) -> dict[str, str]:
    """Speaker -> gender map from a two-column CSV (``speaker,gender``)."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if len(row) >= 2 and row[0] != "speaker":
                out[row[0].strip()] = row[1].strip()
    return out
