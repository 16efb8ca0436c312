"""Objective metric suite: spectral/prosody distortions, controllability
scoring over intensity sweeps, and speaker-leakage measures (mutual
information gap, probe-classifier disentanglement/explicitness, trajectory
summaries).

All metrics are pure functions of their inputs; external speaker embeddings
and transcriptions are ingested, never computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.fft import dct
from scipy.spatial.distance import cdist
from scipy.stats import spearmanr

from .corpus import INTENSITY_EMOTIONS
from . import dsp
from .hed import HierarchicalED, intensity_sweep, SWEEP_VALUES

MCD_COEFFS = 13
MCD_CONSTANT = 10.0 * math.sqrt(2.0) / math.log(10.0)

MIG_BIN_COUNTS = (30, 50, 100)

PROSODY_FEATURES = ("duration", "pitch_mean", "pitch_std",
                    "energy_mean", "energy_std")


class EvalError(Exception):
    pass


class EmptyInput(EvalError):
    pass


class ZeroVector(EvalError):
    pass


class DegenerateFactor(EvalError):
    pass


class SingleClass(EvalError):
    pass


# --- alignment ------------------------------------------------------------------

def dtw_path(cost: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """Optimal monotone alignment through a pairwise cost matrix.

    Steps are (i-1,j), (i,j-1), (i-1,j-1); returns the path and its total
    cost.
    """
    n1, n2 = cost.shape
    if n1 == 0 or n2 == 0:
        raise EmptyInput("cannot align empty sequences")
    acc = np.full((n1 + 1, n2 + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n1 + 1):
        row = cost[i - 1]
        for j in range(1, n2 + 1):
            acc[i, j] = row[j - 1] + min(acc[i - 1, j], acc[i, j - 1],
                                         acc[i - 1, j - 1])
    path = []
    i, j = n1, n2
    while i > 0 and j > 0:
        path.append((i - 1, j - 1))
        steps = (acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
        k = int(np.argmin(steps))
        if k == 0:
            i, j = i - 1, j - 1
        elif k == 1:
            i -= 1
        else:
            j -= 1
    path.reverse()
    return path, float(acc[n1, n2])


def mel_cepstra(log_mel: np.ndarray, n_coeffs: int = MCD_COEFFS) -> np.ndarray:
    """(T, n_coeffs) cepstra: DCT-II of each log-mel frame, c0 dropped."""
    frames = np.asarray(log_mel, dtype=np.float64).T
    coeffs = dct(frames, type=2, norm="ortho", axis=1)
    return coeffs[:, 1:n_coeffs + 1]


def mcd(mel_ref: np.ndarray, mel_syn: np.ndarray) -> float:
    """Mel-cepstral distortion in dB over the DTW-aligned frame pairs."""
    if mel_ref.size == 0 or mel_syn.size == 0:
        raise EmptyInput("empty mel input")
    ca, cb = mel_cepstra(mel_ref), mel_cepstra(mel_syn)
    path, _ = dtw_path(cdist(ca, cb, metric="euclidean"))
    dists = [np.linalg.norm(ca[i] - cb[j]) for i, j in path]
    return MCD_CONSTANT * float(np.mean(dists))


@dataclass(frozen=True)
class PitchEnergyResult:
    pitch_distortion: float | None  # Hz MAE over voiced aligned frames
    energy_distortion: float        # MAE on peak-normalized RMS
    voiced_frames: tuple[int, int]


def pitch_energy_distortion(audio_ref: np.ndarray,
                            audio_syn: np.ndarray) -> PitchEnergyResult:
    """Prosody distortions between two waveforms.

    Pitch: DTW on log-F0 over each track's voiced frames, then mean |dF0|
    in Hz; reported as missing (None) when either side has no voiced
    frames. Energy: DTW on peak-normalized per-frame RMS, mean |dRMS|.
    """
    fa = dsp.compute_frame_features(audio_ref)
    fb = dsp.compute_frame_features(audio_syn)
    f0a = fa.matrix[fa.matrix[:, 2] > 0, 1]
    f0b = fb.matrix[fb.matrix[:, 2] > 0, 1]
    pitch_d: float | None = None
    if f0a.size and f0b.size:
        path, _ = dtw_path(cdist(np.log(f0a)[:, None], np.log(f0b)[:, None]))
        pitch_d = float(np.mean([abs(f0a[i] - f0b[j]) for i, j in path]))
    ea, eb = dsp.frame_rms(audio_ref), dsp.frame_rms(audio_syn)
    ea = ea / max(float(ea.max()), 1e-12)
    eb = eb / max(float(eb.max()), 1e-12)
    path, _ = dtw_path(cdist(ea[:, None], eb[:, None]))
    energy_d = float(np.mean([abs(ea[i] - eb[j]) for i, j in path]))
    return PitchEnergyResult(pitch_distortion=pitch_d,
                             energy_distortion=energy_d,
                             voiced_frames=(int(f0a.size), int(f0b.size)))


def word_error_rate(reference: str, hypothesis: str) -> float:
    """Levenshtein word distance over reference length.

    Transcriptions come from an external recognizer via files; no speech
    recognition happens here.
    """
    ref = reference.strip().split()
    hyp = hypothesis.strip().split()
    if not ref:
        raise EmptyInput("empty reference transcript")
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (r != h))
        prev = cur
    return prev[-1] / len(ref)


def wer_from_files(reference_texts: Mapping[str, str],
                   transcript_dir) -> dict[str, float]:
    """Per-utterance WER from ingested ``<utterance_id>.txt`` transcripts."""
    from pathlib import Path

    out = {}
    for uid, ref in reference_texts.items():
        path = Path(transcript_dir) / f"{uid}.txt"
        if path.is_file():
            out[uid] = word_error_rate(ref, path.read_text(encoding="utf-8"))
    return out


def secs(emb_a: np.ndarray, emb_b: np.ndarray) -> float:
    """Cosine similarity between two speaker embeddings."""
    a = np.asarray(emb_a, dtype=np.float64).reshape(-1)
    b = np.asarray(emb_b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise EvalError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ZeroVector("speaker embedding has zero norm")
    return float(np.dot(a, b) / (na * nb))


# --- controllability ---------------------------------------------------------------

def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    """Pearson correlation; None for constant series.

    Series that are colinear to machine precision snap to exactly +/-1,
    which keeps perfect-probe closure checks exact.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sx, sy = x.std(), y.std()
    if sx < 1e-12 or sy < 1e-12:
        return None
    r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
    if 1.0 - abs(r) <= 1e-12:
        return 1.0 if r > 0 else -1.0
    return r


@dataclass
class ControllabilityReport:
    positive: float
    negative: float
    score: float
    correlation_matrix: np.ndarray  # (4, 4) mean Pearson, NaN where undefined
    skipped_pairs: int = 0
    evaluated_pairs: int = 0

    def to_document(self) -> dict:
        return {
            "positive": self.positive,
            "negative": self.negative,
            "score": self.score,
            "emotions": list(INTENSITY_EMOTIONS),
            "correlation_matrix": [[None if np.isnan(v) else float(v)
                                    for v in row]
                                   for row in self.correlation_matrix],
            "skipped_pairs": self.skipped_pairs,
            "evaluated_pairs": self.evaluated_pairs,
        }


def controllability_score(probe: Callable[[object], np.ndarray],
                          synth: Callable[[object, HierarchicalED], object],
                          cases: Sequence[tuple[object, HierarchicalED]],
                          values: Sequence[float] = SWEEP_VALUES,
                          level: str = "utterance",
                          target=None,
                          target_emotions: Sequence[str] = INTENSITY_EMOTIONS,
                          ) -> ControllabilityReport:
    """Sweep-and-probe controllability scoring.

    For every case and target emotion, synthesize the sweep, collect the
    probe's 4-vector predictions, and correlate each predicted emotion with
    the commanded values. Positive averages the matched (diagonal) Pearson
    correlations; Negative averages mismatched correlations floored at zero;
    Score = Positive - Negative. Pairs with a constant series are skipped
    and counted.
    """
    values = np.asarray(list(values), dtype=np.float64)
    sums = np.zeros((4, 4))
    counts = np.zeros((4, 4), dtype=int)
    skipped = 0
    for case, base_hed in cases:
        for emotion in target_emotions:
            ti = INTENSITY_EMOTIONS.index(emotion)
            heds = intensity_sweep(base_hed, level, emotion, values, target)
            preds = np.stack([np.asarray(probe(synth(case, h)), dtype=np.float64)
                              for h in heds])
            for pj in range(4):
                r = _pearson(values, preds[:, pj])
                if r is None:
                    skipped += 1
                    continue
                sums[ti, pj] += r
                counts[ti, pj] += 1
    with np.errstate(invalid="ignore"):
        matrix = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    target_rows = [INTENSITY_EMOTIONS.index(e) for e in target_emotions]
    diag = [matrix[i, i] for i in target_rows if counts[i, i] > 0]
    off = [max(0.0, matrix[i, j]) for i in target_rows for j in range(4)
           if i != j and counts[i, j] > 0]
    positive = float(np.mean(diag)) if diag else 0.0
    negative = float(np.mean(off)) if off else 0.0
    return ControllabilityReport(
        positive=positive, negative=negative, score=positive - negative,
        correlation_matrix=matrix, skipped_pairs=skipped,
        evaluated_pairs=int(counts.sum()))


# --- mutual information ---------------------------------------------------------------

def equal_frequency_bins(values: np.ndarray, bins: int) -> np.ndarray:
    """Discretize by quantile edges; ``bin = #(edges <= value)``."""
    values = np.asarray(values, dtype=np.float64)
    edges = np.quantile(values, [k / bins for k in range(1, bins)])
    return np.searchsorted(edges, values, side="right")


def _as_codes(labels: Sequence) -> np.ndarray:
    uniq = {v: i for i, v in enumerate(dict.fromkeys(labels))}
    return np.array([uniq[v] for v in labels])


def discrete_entropy(labels: np.ndarray) -> float:
    """Plug-in entropy in nats."""
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log(p)))


def discrete_mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """Plug-in mutual information (nats) from the joint histogram."""
    a, b = _as_codes(a), _as_codes(b)
    joint = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(joint, (a, b), 1.0)
    joint /= joint.sum()
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])))


def mig(codes: np.ndarray, factors: Sequence, bins: int) -> float:
    """Mutual information gap of one factor against the code dimensions.

    Each dimension is discretized into equal-frequency bins; the gap is the
    difference between the highest and second-highest mutual information,
    normalized by the factor entropy.
    """
    codes = np.asarray(codes, dtype=np.float64)
    factors = np.asarray(list(factors))
    if codes.ndim != 2 or codes.shape[0] != factors.shape[0]:
        raise EvalError(f"codes {codes.shape} do not match {factors.shape[0]} factors")
    if codes.shape[0] < bins:
        raise EvalError(f"need at least {bins} samples for {bins} bins")
    h = discrete_entropy(_as_codes(factors))
    if h <= 0.0:
        raise DegenerateFactor("factor has a single label")
    mis = sorted((discrete_mutual_information(
        factors, equal_frequency_bins(codes[:, j], bins))
        for j in range(codes.shape[1])), reverse=True)
    return (mis[0] - mis[1]) / h


def mig_suite(codes: np.ndarray, factors: Sequence,
              bin_counts: Sequence[int] = MIG_BIN_COUNTS) -> dict[int, float]:
    return {b: mig(codes, factors, b) for b in bin_counts}


# --- trajectory summaries ---------------------------------------------------------------

TRAJECTORY_STATS = ("mean", "median", "std", "max", "min", "iqr", "slope",
                    "n_peaks", "mean_peak_prominence", "lag1_autocorr")


def _peak_prominences(s: np.ndarray) -> list[float]:
    proms = []
    for i in range(1, s.shape[0] - 1):
        if not (s[i] > s[i - 1] and s[i] > s[i + 1]):
            continue
        left = s[i]
        for j in range(i - 1, -1, -1):
            if s[j] > s[i]:
                break
            left = min(left, s[j])
        right = s[i]
        for j in range(i + 1, s.shape[0]):
            if s[j] > s[i]:
                break
            right = min(right, s[j])
        proms.append(float(s[i] - max(left, right)))
    return proms


def trajectory_stats(series: np.ndarray) -> np.ndarray:
    """The 10 per-trajectory statistics.

    Peaks are strict interior local maxima; a peak's prominence is its
    height minus the higher of the two flanking minima, where each flank
    extends until a strictly higher sample or the series edge. Slope is the
    least-squares linear coefficient against the sample index; degenerate
    series yield 0 for slope, peaks, and autocorrelation.
    """
    s = np.asarray(series, dtype=np.float64).reshape(-1)
    if s.size == 0:
        raise EmptyInput("empty trajectory")
    t = np.arange(s.shape[0], dtype=np.float64)
    var_t = np.sum((t - t.mean()) ** 2)
    slope = float(np.sum((t - t.mean()) * (s - s.mean())) / var_t) if var_t > 0 else 0.0
    proms = _peak_prominences(s) if s.shape[0] >= 3 else []
    centered = s - s.mean()
    denom = np.sum(centered ** 2)
    lag1 = float(np.sum(centered[:-1] * centered[1:]) / denom) if denom > 0 else 0.0
    return np.array([
        float(s.mean()),
        float(np.median(s)),
        float(s.std()),
        float(s.max()),
        float(s.min()),
        float(np.percentile(s, 75) - np.percentile(s, 25)),
        slope,
        float(len(proms)),
        float(np.mean(proms)) if proms else 0.0,
        lag1,
    ])


def summarize_trajectory(intensities: np.ndarray) -> np.ndarray:
    """(T, 4) per-segment intensities -> 40 floats, emotion-major."""
    arr = np.asarray(intensities, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != len(INTENSITY_EMOTIONS):
        raise EvalError(f"expected (T, 4) intensities, got {arr.shape}")
    return np.concatenate([trajectory_stats(arr[:, k]) for k in range(4)])


# --- probe-classifier leakage metrics ----------------------------------------------------

@dataclass
class ProbeLeakage:
    disentanglement: float
    explicitness_auc: float
    explicitness_score: float  # 2 * (auc - 0.5); 0 at chance


def _probe_importances(kind: str, x, y, seed: int) -> np.ndarray:
    """(n_features, n_classes) non-negative importance matrix."""
    from sklearn.ensemble import RandomForestClassifier
    from sklearn.linear_model import LogisticRegression

    classes = np.unique(y)
    cols = []
    for c in classes:
        target = (y == c).astype(int)
        if kind == "rf":
            clf = RandomForestClassifier(n_estimators=50, random_state=seed)
            clf.fit(x, target)
            cols.append(clf.feature_importances_)
        else:
            clf = LogisticRegression(penalty="l1", solver="liblinear", C=1.0,
                                     random_state=seed, max_iter=500)
            clf.fit(x, target)
            cols.append(np.abs(clf.coef_[0]))
    return np.stack(cols, axis=1)


def _probe_auc(kind: str, x_train, y_train, x_test, y_test, seed: int) -> float:
    from sklearn.ensemble import RandomForestClassifier
    from sklearn.linear_model import LogisticRegression
    from sklearn.metrics import roc_auc_score

    classes = np.unique(y_train)
    aucs = []
    for c in classes:
        if len(np.unique((y_test == c).astype(int))) < 2:
            continue
        if kind == "rf":
            clf = RandomForestClassifier(n_estimators=50, random_state=seed)
        else:
            clf = LogisticRegression(penalty="l1", solver="liblinear", C=1.0,
                                     random_state=seed, max_iter=500)
        clf.fit(x_train, (y_train == c).astype(int))
        proba = clf.predict_proba(x_test)[:, 1]
        aucs.append(roc_auc_score((y_test == c).astype(int), proba))
    return float(np.mean(aucs)) if aucs else 0.5


def disentanglement_explicitness(features: np.ndarray, labels: Sequence,
                                 kind: str = "lasso",
                                 seed: int = 0) -> ProbeLeakage:
    """Probe-classifier leakage of a labeled factor in summary features.

    Disentanglement: importance matrix of one-vs-rest probes, per-feature
    score ``1 - normalized entropy`` of its class-importance distribution,
    weighted by relative total importance. Explicitness: mean one-vs-rest
    AUC of the probe on a held-out half, rescaled so chance maps to 0.
    Lower values mean less leakage.
    """
    from sklearn.model_selection import train_test_split

    if kind not in ("rf", "lasso"):
        raise EvalError(f"unknown probe kind {kind!r}")
    x = np.asarray(features, dtype=np.float64)
    y = _as_codes(list(labels))
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise SingleClass("need at least two classes")
    if counts.min() < 5:
        raise EvalError("need at least 5 samples per class")
    x_train, x_test, y_train, y_test = train_test_split(
        x, y, test_size=0.5, random_state=seed, stratify=y)

    imp = _probe_importances(kind, x_train, y_train, seed)
    row_totals = imp.sum(axis=1)
    total = row_totals.sum()
    if total <= 0:
        disent = 0.0
    else:
        k = imp.shape[1]
        scores = np.zeros(imp.shape[0])
        for i in range(imp.shape[0]):
            if row_totals[i] <= 0:
                continue
            p = imp[i] / row_totals[i]
            h = -np.sum(p[p > 0] * np.log(p[p > 0]))
            scores[i] = 1.0 - h / math.log(k)
        disent = float(np.sum(scores * row_totals / total))

    auc = _probe_auc(kind, x_train, y_train, x_test, y_test, seed)
    return ProbeLeakage(disentanglement=disent, explicitness_auc=auc,
                        explicitness_score=2.0 * (auc - 0.5))


@dataclass
class DisentanglementReport:
    mig_by_bins: dict[int, float]
    disentanglement: dict[str, float]
    explicitness: dict[str, float]
    classifier_kinds: tuple[str, ...] = ("rf", "lasso")

    def to_document(self) -> dict:
        return {"mig": {str(k): v for k, v in self.mig_by_bins.items()},
                "disentanglement": self.disentanglement,
                "explicitness": self.explicitness,
                "classifier_kinds": list(self.classifier_kinds)}


def speaker_leakage_report(codes: np.ndarray, factors: Sequence,
                           summary_features: np.ndarray, labels: Sequence,
                           seed: int = 0) -> DisentanglementReport:
    """MIG over the bin grid plus probe metrics for both classifier kinds."""
    probes = {kind: disentanglement_explicitness(summary_features, labels,
                                                 kind=kind, seed=seed)
              for kind in ("rf", "lasso")}
    return DisentanglementReport(
        mig_by_bins=mig_suite(codes, factors),
        disentanglement={k: p.disentanglement for k, p in probes.items()},
        explicitness={k: p.explicitness_score for k, p in probes.items()})


# --- prosody trends over sweeps -------------------------------------------------------

def prosodic_features(audio: np.ndarray) -> dict[str, float]:
    """Duration, voiced-pitch mean/std, RMS-energy mean/std of a waveform."""
    ff = dsp.compute_frame_features(audio)
    voiced = ff.matrix[ff.matrix[:, 2] > 0, 1]
    rms = dsp.frame_rms(audio)
    return {
        "duration": audio.shape[0] / dsp.SAMPLE_RATE,
        "pitch_mean": float(voiced.mean()) if voiced.size else float("nan"),
        "pitch_std": float(voiced.std()) if voiced.size else float("nan"),
        "energy_mean": float(rms.mean()),
        "energy_std": float(rms.std()),
    }


@dataclass
class TrendEntry:
    correlation: float | None
    expected_sign: int | None = None
    matches_expectation: bool | None = None


def prosody_trend_analysis(synth: Callable[[HierarchicalED], np.ndarray],
                           base_hed: HierarchicalED,
                           level: str = "utterance",
                           values: Sequence[float] = SWEEP_VALUES,
                           target=None,
                           emotions: Sequence[str] = INTENSITY_EMOTIONS,
                           expected: Mapping[str, Mapping[str, int]] | None = None,
                           ) -> dict[str, dict[str, TrendEntry]]:
    """Spearman trend of each prosodic feature against commanded intensity.

    ``synth`` maps an edited distribution to a waveform. Undefined
    correlations (constant feature series) are flagged with None. When an
    expected-sign table is given, each entry records whether the measured
    trend matches it.
    """
    table: dict[str, dict[str, TrendEntry]] = {}
    vals = np.asarray(list(values), dtype=np.float64)
    for emotion in emotions:
        rows = [prosodic_features(synth(h))
                for h in intensity_sweep(base_hed, level, emotion, vals, target)]
        table[emotion] = {}
        for feat in PROSODY_FEATURES:
            series = np.array([r[feat] for r in rows])
            if np.any(np.isnan(series)) or series.std() < 1e-12:
                entry = TrendEntry(correlation=None)
            else:
                rho = spearmanr(vals, series).statistic
                entry = TrendEntry(correlation=float(rho))
                if expected is not None and emotion in expected \
                        and feat in expected[emotion]:
                    sign = expected[emotion][feat]
                    entry.expected_sign = sign
                    entry.matches_expectation = bool(np.sign(rho) == sign)
            table[emotion][feat] = entry
    return table


def expected_prosody_trends(records_features: Mapping[str, Sequence[dict]],
                            ) -> dict[str, dict[str, int]]:
    """Expected trend signs derived from corpus statistics.

    ``records_features`` maps emotion labels (including "Neutral") to lists
    of :func:`prosodic_features` dicts; the sign of each emotional mean
    minus the neutral mean becomes the expected direction.
    """
    neutral = records_features.get("Neutral", [])
    if not neutral:
        raise EvalError("need Neutral utterances as the trend baseline")
    out: dict[str, dict[str, int]] = {}
    for emotion, rows in records_features.items():
        if emotion == "Neutral":
            continue
        out[emotion] = {}
        for feat in PROSODY_FEATURES:
            base = np.nanmean([r[feat] for r in neutral])
            emo = np.nanmean([r[feat] for r in rows])
            out[emotion][feat] = int(np.sign(emo - base)) or 1
    return out


@dataclass
class MetricReport:
    mcd: float
    pitch_distortion: float | None
    energy_distortion: float
    secs: float | None = None
    n_pairs: int = 1
    mcd_halfwidth: float = 0.0

    def to_document(self) -> dict:
        return {"mcd": self.mcd, "pitch_distortion": self.pitch_distortion,
                "energy_distortion": self.energy_distortion, "secs": self.secs,
                "n_pairs": self.n_pairs, "mcd_halfwidth": self.mcd_halfwidth}


def pairwise_metric_report(pairs: Sequence[tuple[np.ndarray, np.ndarray]],
                           embeddings: Sequence[tuple[np.ndarray, np.ndarray]] | None = None,
                           ) -> MetricReport:
    """Aggregate MCD/pitch/energy (and SECS when embeddings are given) over
    (reference, synthesized) waveform pairs with a normal-approximation
    half-width for MCD."""
    mcds, pitches, energies = [], [], []
    for ref, syn in pairs:
        mcds.append(mcd(dsp.compute_mel(ref).matrix, dsp.compute_mel(syn).matrix))
        pe = pitch_energy_distortion(ref, syn)
        if pe.pitch_distortion is not None:
            pitches.append(pe.pitch_distortion)
        energies.append(pe.energy_distortion)
    secs_value = None
    if embeddings:
        secs_value = float(np.mean([secs(a, b) for a, b in embeddings]))
    half = float(1.96 * np.std(mcds) / math.sqrt(len(mcds))) if len(mcds) > 1 else 0.0
    return MetricReport(
        mcd=float(np.mean(mcds)),
        pitch_distortion=float(np.mean(pitches)) if pitches else None,
        energy_distortion=float(np.mean(energies)),
        secs=secs_value, n_pairs=len(pairs), mcd_halfwidth=half)
