"""Classical mel inversion: filterbank pseudo-inverse plus Griffin-Lim.

Zero-training stand-in for a neural vocoder. The STFT/iSTFT pair mirrors the
analysis framing used everywhere else (hop 256, window 1024, frames centered
at ``i * hop``), so ``compute_mel(mel_to_audio(m))`` lines up column-for-column
with ``m``.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import rfft, irfft

from .dsp import FFT_SIZE, HOP_LENGTH, frame_signal, mel_filterbank

GRIFFIN_LIM_ITERS = 64


def _window(win: int = FFT_SIZE) -> np.ndarray:
    return np.hanning(win + 1)[:-1]


def stft(audio: np.ndarray, win: int = FFT_SIZE,
         hop: int = HOP_LENGTH) -> np.ndarray:
    """(T, win // 2 + 1) complex spectra with the shared centered framing."""
    frames = frame_signal(audio, win, hop)
    return rfft(frames * _window(win), n=win, axis=1)


def istft(spectra: np.ndarray, n_samples: int, win: int = FFT_SIZE,
          hop: int = HOP_LENGTH) -> np.ndarray:
    """Least-squares overlap-add inverse of :func:`stft`."""
    window = _window(win)
    frames = irfft(spectra, n=win, axis=1) * window
    pad = win // 2
    buf = np.zeros(n_samples + 2 * pad)
    norm = np.zeros_like(buf)
    wsq = window ** 2
    for i in range(frames.shape[0]):
        lo = i * hop
        buf[lo:lo + win] += frames[i]
        norm[lo:lo + win] += wsq
    out = buf / np.maximum(norm, 1e-8)
    return out[pad:pad + n_samples]


def mel_to_magnitude(log_mel: np.ndarray) -> np.ndarray:
    """(T, fft//2+1) linear magnitudes from a (bands, T) log-power mel."""
    fb = mel_filterbank(n_bands=log_mel.shape[0])
    mel_power = np.exp(np.asarray(log_mel, dtype=np.float64)).T
    linear_power = np.clip(mel_power @ np.linalg.pinv(fb).T, 0.0, None)
    return np.sqrt(linear_power)


def griffin_lim(magnitude: np.ndarray, n_samples: int,
                n_iters: int = GRIFFIN_LIM_ITERS) -> np.ndarray:
    """Iterative phase reconstruction from a (T, freq) magnitude matrix."""
    audio = istft(magnitude.astype(np.complex128), n_samples)
    for _ in range(n_iters):
        spectra = stft(audio)
        phase = spectra / np.maximum(np.abs(spectra), 1e-12)
        audio = istft(magnitude * phase, n_samples)
    return audio


def mel_to_audio(log_mel: np.ndarray, n_iters: int = GRIFFIN_LIM_ITERS,
                 n_samples: int | None = None) -> np.ndarray:
    """Waveform whose mel analysis approximates ``log_mel``.

    Deterministic: the phase search starts from the zero-phase signal.
    """
    if n_samples is None:
        n_samples = log_mel.shape[1] * HOP_LENGTH
    magnitude = mel_to_magnitude(log_mel)
    audio = griffin_lim(magnitude, n_samples, n_iters)
    peak = np.max(np.abs(audio))
    if peak > 1.0:
        audio = audio / peak
    return audio
