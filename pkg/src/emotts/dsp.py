"""Signal processing: mel spectrograms, frame features, segment functionals.

All framing is shared: hop 256 at 16 kHz, analysis window 1024, frames
centered at ``i * hop`` with reflect padding, so a signal of ``n`` samples
yields exactly ``ceil(n / hop)`` frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import rfft, irfft

SAMPLE_RATE = 16_000
HOP_LENGTH = 256
FFT_SIZE = 1024
MEL_BANDS = 100
MEL_FMIN = 0.0
MEL_FMAX = 8000.0
LOG_FLOOR = 1e-10

FRAME_RATE = SAMPLE_RATE / HOP_LENGTH  # 62.5 Hz

F0_MIN = 50.0
F0_MAX = 500.0
VOICING_THRESHOLD = 0.3

# Built-in frame feature layout (D = 22).
FRAME_FEATURE_NAMES = (
    "log_energy", "f0", "voicing", "zcr", "spectral_centroid", "spectral_flux",
) + tuple(f"melband_{i}" for i in range(16))
FRAME_FEATURE_DIM = len(FRAME_FEATURE_NAMES)

FUNCTIONAL_STATS = ("mean", "std", "min", "max")
FUNCTIONAL_DIM = FRAME_FEATURE_DIM * len(FUNCTIONAL_STATS)  # 88

STD_FLOOR = 1e-8


class DspError(Exception):
    pass


class TooShort(DspError):
    pass


class EmptySegment(DspError):
    pass


@dataclass(frozen=True)
class MelSpectrogram:
    matrix: np.ndarray  # (MEL_BANDS, T) natural-log amplitude
    hop: int = HOP_LENGTH
    fft: int = FFT_SIZE
    sample_rate: int = SAMPLE_RATE

    @property
    def n_frames(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class FrameFeatures:
    matrix: np.ndarray  # (T, D)
    frame_rate: float = FRAME_RATE
    provider: str = "builtin_dsp"

    @property
    def n_frames(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    count: int

    def to_document(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "count": self.count}

    @classmethod
    def from_document(cls, doc: dict) -> "NormStats":
        return cls(mean=np.asarray(doc["mean"], dtype=np.float64),
                   std=np.asarray(doc["std"], dtype=np.float64),
                   count=int(doc["count"]))


def frame_signal(audio: np.ndarray, win: int = FFT_SIZE,
                 hop: int = HOP_LENGTH) -> np.ndarray:
    """(T, win) frames, T = ceil(len/hop), frame i centered at sample i*hop."""
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim != 1:
        raise DspError("expected mono audio")
    n = audio.shape[0]
    if n < win:
        raise TooShort(f"need at least {win} samples, got {n}")
    n_frames = -(-n // hop)  # ceil
    pad = win // 2
    padded = np.pad(audio, pad, mode="reflect")
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    return padded[idx]


def _power_spectra(frames: np.ndarray, n_fft: int = FFT_SIZE) -> np.ndarray:
    window = np.hanning(frames.shape[1] + 1)[:-1]
    spectra = rfft(frames * window, n=n_fft, axis=1)
    return np.abs(spectra) ** 2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_band_edges_hz(n_bands: int = MEL_BANDS, fmin: float = MEL_FMIN,
                      fmax: float = MEL_FMAX) -> np.ndarray:
    """(n_bands + 2,) Hz edge grid; band k spans edges [k, k+2]."""
    mels = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2)
    return mel_to_hz(mels)


def mel_filterbank(n_bands: int = MEL_BANDS, n_fft: int = FFT_SIZE,
                   sample_rate: int = SAMPLE_RATE, fmin: float = MEL_FMIN,
                   fmax: float = MEL_FMAX) -> np.ndarray:
    """(n_bands, n_fft // 2 + 1) triangular weights, unit peak."""
    edges = mel_band_edges_hz(n_bands, fmin, fmax)
    freqs = np.linspace(0, sample_rate / 2, n_fft // 2 + 1)
    fb = np.zeros((n_bands, freqs.shape[0]))
    for k in range(n_bands):
        lo, mid, hi = edges[k], edges[k + 1], edges[k + 2]
        up = (freqs - lo) / max(mid - lo, 1e-12)
        down = (hi - freqs) / max(hi - mid, 1e-12)
        fb[k] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def compute_mel(audio: np.ndarray) -> MelSpectrogram:
    """100-band log-mel spectrogram; entries are log(max(power, 1e-10))."""
    frames = frame_signal(audio)
    power = _power_spectra(frames)
    mel_power = power @ mel_filterbank().T
    matrix = np.log(np.maximum(mel_power, LOG_FLOOR)).T
    return MelSpectrogram(matrix=matrix)


def _autocorrelation_f0(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame (f0_hz, voicing) from the normalized autocorrelation peak.

    Searches lags for 50-500 Hz; a frame is voiced when the interpolated
    peak of r(tau)/r(0) reaches the 0.3 threshold.
    """
    n = frames.shape[1]
    lag_min = int(SAMPLE_RATE / F0_MAX)
    lag_max = int(SAMPLE_RATE / F0_MIN)
    centered = frames - frames.mean(axis=1, keepdims=True)
    spec = rfft(centered, n=2 * n, axis=1)
    acf = irfft(np.abs(spec) ** 2, axis=1)[:, :lag_max + 2]
    r0 = acf[:, 0]
    f0 = np.zeros(frames.shape[0])
    voicing = np.zeros(frames.shape[0])
    for i in range(frames.shape[0]):
        if r0[i] < 1e-12:
            continue
        r = acf[i] / r0[i]
        seg = r[lag_min:lag_max + 1]
        k = int(np.argmax(seg))
        peak = seg[k]
        if peak < VOICING_THRESHOLD:
            continue
        lag = lag_min + k
        # Parabolic interpolation around the integer-lag peak.
        if 0 < k < seg.shape[0] - 1:
            a, b, c = seg[k - 1], seg[k], seg[k + 1]
            denom = a - 2 * b + c
            if abs(denom) > 1e-12:
                lag += 0.5 * (a - c) / denom
        f0[i] = SAMPLE_RATE / lag
        voicing[i] = 1.0
    return f0, voicing


def compute_frame_features(audio: np.ndarray) -> FrameFeatures:
    """Built-in 22-dim frame features at 62.5 Hz (hop 256).

    Columns: log-energy, F0 (Hz, 0 when unvoiced), voicing flag,
    zero-crossing rate, spectral centroid (Hz), spectral flux, then 16
    mel-band log energies.
    """
    frames = frame_signal(audio)
    t = frames.shape[0]
    out = np.zeros((t, FRAME_FEATURE_DIM))

    out[:, 0] = np.log(np.mean(frames ** 2, axis=1) + LOG_FLOOR)
    out[:, 1], out[:, 2] = _autocorrelation_f0(frames)
    signs = np.signbit(frames)
    out[:, 3] = np.mean(signs[:, 1:] != signs[:, :-1], axis=1)

    power = _power_spectra(frames)
    mag = np.sqrt(power)
    freqs = np.linspace(0, SAMPLE_RATE / 2, mag.shape[1])
    denom = mag.sum(axis=1)
    nz = denom > 1e-12
    out[nz, 4] = (mag[nz] * freqs).sum(axis=1) / denom[nz]
    out[1:, 5] = np.linalg.norm(np.diff(mag, axis=0), axis=1)

    fb16 = mel_filterbank(n_bands=16)
    out[:, 6:] = np.log(np.maximum(power @ fb16.T, LOG_FLOOR))
    return FrameFeatures(matrix=out)


def frame_rms(audio: np.ndarray) -> np.ndarray:
    """Per-frame RMS energy with the shared framing."""
    frames = frame_signal(audio)
    return np.sqrt(np.mean(frames ** 2, axis=1))


def frames_in_span(ff: FrameFeatures, start: float, end: float) -> np.ndarray:
    """Indices of frames whose center time lies in [start, end)."""
    times = np.arange(ff.n_frames) / ff.frame_rate
    return np.nonzero((times >= start) & (times < end))[0]


def compute_segment_functionals(ff: FrameFeatures, start: float,
                                end: float) -> np.ndarray:
    """88-dim functional vector: (mean, std, min, max) per base feature.

    Layout is feature-major: entries ``4j .. 4j+3`` hold the four stats of
    base feature ``j``.
    """
    idx = frames_in_span(ff, start, end)
    if idx.size == 0:
        raise EmptySegment(f"no frames inside [{start:.3f}, {end:.3f})")
    seg = ff.matrix[idx]
    stats = np.stack([seg.mean(axis=0), seg.std(axis=0),
                      seg.min(axis=0), seg.max(axis=0)], axis=1)
    return stats.reshape(-1)


def fit_norm_stats(vectors: np.ndarray) -> NormStats:
    """Per-dimension mean/std over the fitting set; std floored at 1e-8."""
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise DspError("need at least 2 vectors to fit normalization stats")
    mean = arr.mean(axis=0)
    std = np.maximum(arr.std(axis=0), STD_FLOOR)
    return NormStats(mean=mean, std=std, count=arr.shape[0])


def apply_norm(v: np.ndarray, stats: NormStats) -> np.ndarray:
    return (np.asarray(v, dtype=np.float64) - stats.mean) / stats.std


def invert_norm(v: np.ndarray, stats: NormStats) -> np.ndarray:
    return np.asarray(v, dtype=np.float64) * stats.std + stats.mean
