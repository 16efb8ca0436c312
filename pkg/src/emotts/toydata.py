"""Synthetic ESD-style corpus for desk-scale runs and hermetic tests.

Utterances are built from a small nonce-word lexicon; vowels are harmonic
tones, consonants are noise bursts. Emotion labels modulate pitch, energy,
and tempo so that intensity extractors and prosody-trend analysis have real
signal to find.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .corpus import EMOTION_LABELS
from .service import waveform_to_wav_bytes

SAMPLE_RATE = 16_000

VOWELS = {"AA": 1.0, "IY": 1.5, "UW": 0.8, "OW": 0.9, "EH": 1.2}
CONSONANTS = {"S": 6000.0, "T": 4000.0, "K": 2500.0, "M": 400.0, "N": 600.0}

LEXICON = {
    "bama": ["M", "AA", "M", "AA"],
    "seeko": ["S", "IY", "K", "OW"],
    "tunee": ["T", "UW", "N", "IY"],
    "kesa": ["K", "EH", "S", "AA"],
    "nomu": ["N", "OW", "M", "UW"],
    "teesa": ["T", "IY", "S", "AA"],
}

# (f0 multiplier, energy multiplier, duration multiplier)
EMOTION_PROFILE = {
    "Neutral": (1.00, 1.00, 1.00),
    "Angry": (1.05, 1.80, 0.90),
    "Happy": (1.30, 1.20, 0.95),
    "Sad": (0.80, 0.60, 1.30),
    "Surprise": (1.45, 1.10, 0.95),
}


def phone_inventory() -> tuple[str, ...]:
    return tuple(sorted(set(VOWELS) | set(CONSONANTS) | {"SIL"}))


def _render_phone(symbol: str, duration: float, f0: float, energy: float,
                  rng: np.random.Generator) -> np.ndarray:
    n = max(int(duration * SAMPLE_RATE), 32)
    t = np.arange(n) / SAMPLE_RATE
    if symbol in VOWELS:
        base = f0 * VOWELS[symbol] ** 0.15
        wave = np.zeros(n)
        for k, amp in enumerate((1.0, 0.5, 0.3, 0.15), start=1):
            wave += amp * np.sin(2 * np.pi * base * k * t
                                 + rng.uniform(0, 2 * np.pi))
        wave *= 0.25 * energy
    elif symbol in CONSONANTS:
        noise = rng.standard_normal(n)
        # crude band emphasis around the consonant's characteristic frequency
        carrier = np.sin(2 * np.pi * CONSONANTS[symbol] * t)
        wave = 0.08 * energy * noise * (0.5 + 0.5 * np.abs(carrier))
    else:  # SIL
        wave = np.zeros(n)
    fade = min(80, n // 4)
    env = np.ones(n)
    env[:fade] = np.linspace(0, 1, fade)
    env[-fade:] = np.linspace(1, 0, fade)
    return wave * env


def _render_utterance(words: list[str], emotion: str, speaker_f0: float,
                      rng: np.random.Generator):
    f0_mul, energy_mul, dur_mul = EMOTION_PROFILE[emotion]
    phones = []  # (symbol, start, end, word_index)
    word_entries = []
    audio = [np.zeros(int(0.05 * SAMPLE_RATE))]
    cursor = 0.05
    for wi, word in enumerate(words):
        word_start = cursor
        for symbol in LEXICON[word]:
            dur = rng.uniform(0.06, 0.14) * dur_mul
            seg = _render_phone(symbol, dur, speaker_f0 * f0_mul,
                                energy_mul, rng)
            audio.append(seg)
            end = cursor + seg.shape[0] / SAMPLE_RATE
            phones.append((symbol, round(cursor, 4), round(end, 4), wi))
            cursor = end
        word_entries.append((word, round(word_start, 4), round(cursor, 4)))
        if wi != len(words) - 1:
            gap = rng.uniform(0.02, 0.05)
            audio.append(np.zeros(int(gap * SAMPLE_RATE)))
            cursor += int(gap * SAMPLE_RATE) / SAMPLE_RATE
            cursor = round(cursor, 4)
    audio.append(np.zeros(int(0.05 * SAMPLE_RATE)))
    return np.concatenate(audio), phones, word_entries


def generate_toy_corpus(root: str | Path, n_speakers: int = 2,
                        utterances_per_cell: int = 6,
                        seed: int = 0) -> Path:
    """Write a toy corpus under ``root``; returns the corpus directory.

    Layout: ``corpus/<speaker>/<emotion>/<id>.wav`` with per-speaker
    transcripts, ``alignments/<id>.json``, ``genders.csv``, and a ready-made
    ``config.json``.
    """
    root = Path(root)
    corpus_dir = root / "corpus"
    align_dir = root / "alignments"
    align_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    word_list = sorted(LEXICON)

    genders = []
    for s in range(n_speakers):
        speaker = f"{11 + s:04d}"
        speaker_f0 = 200.0 if s % 2 == 0 else 125.0
        genders.append((speaker, "f" if s % 2 == 0 else "m"))
        speaker_dir = corpus_dir / speaker
        transcript_lines = []
        counter = 1
        for emotion in EMOTION_LABELS:
            emo_dir = speaker_dir / emotion
            emo_dir.mkdir(parents=True, exist_ok=True)
            for _ in range(utterances_per_cell):
                uid = f"{speaker}_{counter:06d}"
                counter += 1
                n_words = int(rng.integers(2, 4))
                words = [word_list[int(rng.integers(len(word_list)))]
                         for _ in range(n_words)]
                audio, phones, word_entries = _render_utterance(
                    words, emotion, speaker_f0, rng)
                (emo_dir / f"{uid}.wav").write_bytes(
                    waveform_to_wav_bytes(audio))
                doc = {
                    "utterance_id": uid,
                    "words": [{"text": w, "start": s0, "end": e0}
                              for w, s0, e0 in word_entries],
                    "phones": [{"symbol": sym, "start": s0, "end": e0,
                                "word_index": wi}
                               for sym, s0, e0, wi in phones],
                }
                (align_dir / f"{uid}.json").write_text(json.dumps(doc),
                                                       encoding="utf-8")
                transcript_lines.append(f"{uid}\t{' '.join(words)}\t{emotion}")
        (speaker_dir / f"{speaker}.txt").write_text(
            "\n".join(transcript_lines) + "\n", encoding="utf-8")

    (root / "genders.csv").write_text(
        "speaker,gender\n" + "\n".join(f"{s},{g}" for s, g in genders) + "\n",
        encoding="utf-8")
    config = {
        "corpus_root": str(corpus_dir),
        "alignments_dir": str(align_dir),
        "cache_dir": str(root / "cache"),
        "checkpoints_dir": str(root / "checkpoints"),
        "sessions_dir": str(root / "sessions"),
        "speaker_genders_csv": str(root / "genders.csv"),
        "seed": seed,
    }
    (root / "config.json").write_text(json.dumps(config, indent=2),
                                      encoding="utf-8")
    return corpus_dir
