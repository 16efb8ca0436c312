"""Flow-matching acoustic model conditioned on hierarchical emotion intensities.

A transformer text encoder produces per-phoneme linguistic embeddings; these
are fused with a speaker embedding and the 12-dim emotion-distribution row,
expanded by predicted durations, and projected to an average mel-spectrogram
``mu`` that conditions a 1-D U-Net trained with optimal-transport conditional
flow matching: straight paths ``x_t = (1 - (1 - sigma_min) t) x0 + t x1`` from
Gaussian noise to the target mel, regressing the field ``x1 - (1 - sigma_min) x0``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .containers import SchemaVersionMismatch
from .dsp import HOP_LENGTH, MEL_BANDS, SAMPLE_RATE
from .hed import HED_DIM, HierarchicalED
from . import vocoder

CHECKPOINT_VERSION = 1

SIGMA_MIN = 1e-4
DEFAULT_ODE_STEPS = 10


class TTSError(Exception):
    pass


class UnknownSymbol(TTSError):
    pass


class LengthMismatch(TTSError):
    pass


class ModelNotLoaded(TTSError):
    pass


class NaNLoss(TTSError):
    pass


@dataclass
class TTSConfig:
    phone_inventory: tuple[str, ...]
    d_model: int = 192
    n_heads: int = 2
    n_layers: int = 2
    ff_dim: int = 384
    speaker_dim: int = 256
    hed_dim: int = HED_DIM
    mel_dim: int = MEL_BANDS
    decoder_width: int = 64
    decoder_stages: int = 2
    time_emb_dim: int = 64
    sigma_min: float = SIGMA_MIN

    def __post_init__(self):
        self.phone_inventory = tuple(self.phone_inventory)


def sinusoidal_embedding(positions: torch.Tensor, dim: int) -> torch.Tensor:
    """(N,) positions -> (N, dim) sin/cos features."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10_000.0) * torch.arange(half, dtype=positions.dtype,
                                           device=positions.device)
        / max(half - 1, 1))
    args = positions[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    if dim % 2:
        emb = torch.nn.functional.pad(emb, (0, 1))
    return emb


class TextEncoder(nn.Module):
    """Phoneme embeddings + sinusoidal positions + self-attention blocks."""

    def __init__(self, config: TTSConfig):
        super().__init__()
        self.symbol_to_id = {s: i for i, s in enumerate(config.phone_inventory)}
        self.embedding = nn.Embedding(len(config.phone_inventory), config.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=config.d_model, nhead=config.n_heads,
            dim_feedforward=config.ff_dim, dropout=0.0, batch_first=True)
        self.blocks = nn.TransformerEncoder(layer, num_layers=config.n_layers)
        self.d_model = config.d_model

    def encode_ids(self, ids: torch.Tensor) -> torch.Tensor:
        x = self.embedding(ids)
        pos = sinusoidal_embedding(
            torch.arange(ids.shape[-1], dtype=x.dtype, device=x.device),
            self.d_model)
        return self.blocks((x + pos).unsqueeze(0)).squeeze(0)

    def forward(self, symbols: Sequence[str]) -> torch.Tensor:
        if len(symbols) == 0:
            raise TTSError("empty phoneme sequence")
        try:
            ids = torch.tensor([self.symbol_to_id[s] for s in symbols])
        except KeyError as exc:
            raise UnknownSymbol(f"symbol {exc.args[0]!r} not in inventory") from exc
        return self.encode_ids(ids)


class DurationPredictor(nn.Module):
    """Two 1-D convolutions and a projection to per-phoneme log-durations."""

    def __init__(self, dim: int):
        super().__init__()
        self.conv1 = nn.Conv1d(dim, dim, kernel_size=3, padding=1)
        self.conv2 = nn.Conv1d(dim, dim, kernel_size=3, padding=1)
        self.proj = nn.Linear(dim, 1)

    def forward(self, cond: torch.Tensor) -> torch.Tensor:
        """(n, dim) conditioning -> (n,) log frame counts."""
        h = cond.t().unsqueeze(0)
        h = torch.relu(self.conv1(h))
        h = torch.relu(self.conv2(h))
        return self.proj(h.squeeze(0).t()).squeeze(-1)


def durations_to_frames(log_durations: torch.Tensor) -> torch.Tensor:
    """Synthesis rule: frames = max(1, round(exp(log_duration)))."""
    return torch.clamp(torch.round(torch.exp(log_durations)), min=1).long()


def alignment_frame_target(duration_seconds: float,
                           sample_rate: int = SAMPLE_RATE,
                           hop: int = HOP_LENGTH) -> int:
    """Supervision target in frames for one aligned phone."""
    return max(1, round(duration_seconds * sample_rate / hop))


class ResBlock1D(nn.Module):
    def __init__(self, channels: int, time_dim: int):
        super().__init__()
        groups = min(8, channels)
        self.norm1 = nn.GroupNorm(groups, channels)
        self.conv1 = nn.Conv1d(channels, channels, kernel_size=3, padding=1)
        self.time_proj = nn.Linear(time_dim, channels)
        self.norm2 = nn.GroupNorm(groups, channels)
        self.conv2 = nn.Conv1d(channels, channels, kernel_size=3, padding=1)

    def forward(self, x: torch.Tensor, t_emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(torch.nn.functional.silu(self.norm1(x)))
        # Time enters after the second norm; adding it before would be
        # cancelled by the per-group mean subtraction.
        h = self.norm2(h) + self.time_proj(t_emb)[:, :, None]
        h = self.conv2(torch.nn.functional.silu(h))
        return x + h


class FlowDecoder(nn.Module):
    """1-D U-Net predicting the flow field from (x_t, t, mu).

    ``x_t`` and ``mu`` enter stacked as channels; the step ``t`` enters as a
    sinusoidal embedding passed through a small MLP and added inside each
    residual block.
    """

    def __init__(self, mel_dim: int, width: int = 64, stages: int = 2,
                 time_emb_dim: int = 64):
        super().__init__()
        self.mel_dim = mel_dim
        self.stages = stages
        self.time_emb_dim = time_emb_dim
        self.time_mlp = nn.Sequential(
            nn.Linear(time_emb_dim, time_emb_dim), nn.SiLU(),
            nn.Linear(time_emb_dim, time_emb_dim))
        self.in_conv = nn.Conv1d(2 * mel_dim, width, kernel_size=1)
        self.down_blocks = nn.ModuleList(
            ResBlock1D(width, time_emb_dim) for _ in range(stages))
        self.downsamples = nn.ModuleList(
            nn.Conv1d(width, width, kernel_size=3, stride=2, padding=1)
            for _ in range(stages))
        self.mid = ResBlock1D(width, time_emb_dim)
        self.upsamples = nn.ModuleList(
            nn.ConvTranspose1d(width, width, kernel_size=4, stride=2, padding=1)
            for _ in range(stages))
        self.skip_merges = nn.ModuleList(
            nn.Conv1d(2 * width, width, kernel_size=1) for _ in range(stages))
        self.up_blocks = nn.ModuleList(
            ResBlock1D(width, time_emb_dim) for _ in range(stages))
        self.out_conv = nn.Conv1d(width, mel_dim, kernel_size=1)

    def forward(self, x_t: torch.Tensor, t: torch.Tensor,
                mu: torch.Tensor) -> torch.Tensor:
        """x_t, mu: (B, mel, T); t: (B,) in [0, 1] -> field (B, mel, T)."""
        length = x_t.shape[-1]
        multiple = 2 ** self.stages
        pad = (-length) % multiple
        if pad:
            x_t = torch.nn.functional.pad(x_t, (0, pad))
            mu = torch.nn.functional.pad(mu, (0, pad))
        t_emb = self.time_mlp(sinusoidal_embedding(t.to(x_t.dtype),
                                                   self.time_emb_dim))
        h = self.in_conv(torch.cat([x_t, mu], dim=1))
        skips = []
        for block, down in zip(self.down_blocks, self.downsamples):
            h = block(h, t_emb)
            skips.append(h)
            h = down(h)
        h = self.mid(h, t_emb)
        for up, merge, block in zip(self.upsamples, self.skip_merges,
                                    self.up_blocks):
            h = up(h)
            h = merge(torch.cat([h, skips.pop()], dim=1))
            h = block(h, t_emb)
        return self.out_conv(h)[:, :, :length]


def ot_path(x0: torch.Tensor, x1: torch.Tensor, t: torch.Tensor,
            sigma_min: float = SIGMA_MIN) -> tuple[torch.Tensor, torch.Tensor]:
    """Interpolant x_t and target field u for the straight probability path."""
    tt = t.view(-1, *([1] * (x1.dim() - 1)))
    x_t = (1.0 - (1.0 - sigma_min) * tt) * x0 + tt * x1
    u = x1 - (1.0 - sigma_min) * x0
    return x_t, u


def cfm_loss(decoder: FlowDecoder, x1: torch.Tensor, mu: torch.Tensor,
             t: torch.Tensor, x0: torch.Tensor,
             sigma_min: float = SIGMA_MIN) -> torch.Tensor:
    x_t, u = ot_path(x0, x1, t, sigma_min)
    return torch.mean((decoder(x_t, t, mu) - u) ** 2)


def cfm_train_step(decoder: FlowDecoder, x1: torch.Tensor, mu: torch.Tensor,
                   generator: torch.Generator,
                   sigma_min: float = SIGMA_MIN) -> torch.Tensor:
    """Sample (t, x0) and return the flow-matching regression loss."""
    batch = x1.shape[0]
    t = torch.rand(batch, generator=generator, dtype=x1.dtype)
    x0 = torch.randn(x1.shape, generator=generator, dtype=x1.dtype)
    loss = cfm_loss(decoder, x1, mu, t, x0, sigma_min)
    if not torch.isfinite(loss):
        raise NaNLoss("flow-matching loss diverged")
    return loss


@torch.no_grad()
def sample_flow(decoder: FlowDecoder, mu: torch.Tensor, n_ode_steps: int,
                seed: int) -> torch.Tensor:
    """Euler-integrate the learned field from noise at t=0 to t=1."""
    if n_ode_steps < 1:
        raise TTSError("n_ode_steps must be >= 1")
    generator = torch.Generator().manual_seed(seed)
    x = torch.randn(mu.shape, generator=generator, dtype=mu.dtype)
    dt = 1.0 / n_ode_steps
    for k in range(n_ode_steps):
        t = torch.full((mu.shape[0],), k * dt, dtype=mu.dtype)
        x = x + decoder(x, t, mu) * dt
    return x


@dataclass
class SynthesisRequest:
    hed: HierarchicalED
    speaker_embedding: np.ndarray
    phonemes: Sequence[str] | None = None
    text: str | None = None
    durations: Sequence[int] | None = None  # frames per phone; else predicted
    n_ode_steps: int = DEFAULT_ODE_STEPS
    seed: int = 0


class AcousticModel(nn.Module):
    """Text encoder + duration adapter + conditioning fusion + flow decoder."""

    def __init__(self, config: TTSConfig):
        super().__init__()
        self.config = config
        self.text_encoder = TextEncoder(config)
        self.cond_proj = nn.Linear(
            config.d_model + config.speaker_dim + config.hed_dim, config.d_model)
        self.duration = DurationPredictor(config.d_model)
        self.mu_proj = nn.Linear(config.d_model, config.mel_dim)
        self.decoder = FlowDecoder(config.mel_dim, config.decoder_width,
                                   config.decoder_stages, config.time_emb_dim)
        self.lexicon: dict[str, list[str]] = {}

    def encode_text(self, symbols: Sequence[str]) -> torch.Tensor:
        return self.text_encoder(symbols)

    def build_conditioning(self, linguistic: torch.Tensor,
                           speaker: torch.Tensor,
                           hed_matrix: torch.Tensor) -> torch.Tensor:
        """(n, d_model) fused conditioning from the three embedding streams."""
        n = linguistic.shape[0]
        if hed_matrix.shape[0] != n:
            raise LengthMismatch(
                f"{hed_matrix.shape[0]} intensity rows for {n} phonemes")
        if speaker.shape[-1] != self.config.speaker_dim:
            raise LengthMismatch(
                f"speaker embedding dim {speaker.shape[-1]}, expected "
                f"{self.config.speaker_dim}")
        stacked = torch.cat(
            [linguistic, speaker.expand(n, -1), hed_matrix], dim=-1)
        return self.cond_proj(stacked)

    def average_mel(self, cond: torch.Tensor,
                    durations: torch.Tensor) -> torch.Tensor:
        """Duration-expanded conditioning projected to mel space: (mel, T)."""
        expanded = torch.repeat_interleave(cond, durations, dim=0)
        return self.mu_proj(expanded).t()

    def phonemes_for(self, request: SynthesisRequest) -> list[str]:
        if request.phonemes:
            return list(request.phonemes)
        if not request.text or not request.text.strip():
            raise TTSError("request has neither phonemes nor non-empty text")
        phones: list[str] = []
        for word in request.text.strip().split():
            key = word.lower().strip(".,!?;:")
            if key not in self.lexicon:
                raise UnknownSymbol(f"word {key!r} not in lexicon")
            phones.extend(self.lexicon[key])
        return phones

    @torch.no_grad()
    def synthesize_mel(self, request: SynthesisRequest) -> np.ndarray:
        """(mel_dim, T) log-mel for a request; deterministic given the seed."""
        self.eval()
        phones = self.phonemes_for(request)
        if request.hed.n_phones != len(phones):
            raise LengthMismatch(
                f"{request.hed.n_phones} intensity rows for {len(phones)} phonemes")
        ling = self.encode_text(phones)
        speaker = torch.as_tensor(request.speaker_embedding,
                                  dtype=ling.dtype)
        hed_m = torch.as_tensor(np.asarray(request.hed.matrix),
                                dtype=ling.dtype)
        cond = self.build_conditioning(ling, speaker, hed_m)
        if request.durations is not None:
            durations = torch.as_tensor(list(request.durations),
                                        dtype=torch.long)
            if durations.shape[0] != len(phones):
                raise LengthMismatch("durations do not match phoneme count")
        else:
            durations = durations_to_frames(self.duration(cond))
        mu = self.average_mel(cond, durations).unsqueeze(0)
        mel = sample_flow(self.decoder, mu, request.n_ode_steps, request.seed)
        return mel.squeeze(0).numpy()

    def synthesize(self, request: SynthesisRequest,
                   vocoder_iters: int = 64) -> tuple[np.ndarray, np.ndarray]:
        """(log-mel matrix, waveform) via iterative phase reconstruction."""
        mel = self.synthesize_mel(request)
        audio = vocoder.mel_to_audio(mel, n_iters=vocoder_iters)
        return mel, audio


def pseudo_speaker_embedding(speaker_id: str, dim: int = 256) -> np.ndarray:
    """Deterministic stand-in for an external speaker-verifier embedding."""
    digest = hashlib.sha256(speaker_id.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim)
    return (v / np.linalg.norm(v)).astype(np.float32)


# --- training -------------------------------------------------------------------

@dataclass
class TTSTrainingItem:
    phonemes: list[str]
    durations: list[int]          # frames per phone, from the alignment
    mel: np.ndarray               # (mel_dim, T) log-mel target
    hed_matrix: np.ndarray        # (n, 12)
    speaker_embedding: np.ndarray


@dataclass
class TTSTrainReport:
    cfm_loss: list[float] = field(default_factory=list)
    duration_loss: list[float] = field(default_factory=list)
    prior_loss: list[float] = field(default_factory=list)

    def total(self) -> list[float]:
        return [a + b + c for a, b, c in
                zip(self.cfm_loss, self.duration_loss, self.prior_loss)]


def fit_mel_length(mel: np.ndarray, total_frames: int) -> np.ndarray:
    """Crop or edge-pad a (mel, T) matrix to the duration-expanded length."""
    t = mel.shape[1]
    if t >= total_frames:
        return mel[:, :total_frames]
    return np.pad(mel, ((0, 0), (0, total_frames - t)), mode="edge")


def train_tts(items: Sequence[TTSTrainingItem], config: TTSConfig,
              steps: int = 200, lr: float = 1e-3, seed: int = 0,
              prior_weight: float = 1.0,
              model: AcousticModel | None = None,
              ) -> tuple[AcousticModel, TTSTrainReport]:
    """Step-based training over single-utterance batches.

    Per step: flow-matching loss on the target mel (cropped to the expanded
    length), log-domain MSE on durations, and a small prior pulling mu
    toward the target, which speeds up desk-scale convergence.
    """
    if not items:
        raise TTSError("no training items")
    torch.set_num_threads(1)
    torch.manual_seed(seed)
    if model is None:
        model = AcousticModel(config)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    generator = torch.Generator().manual_seed(seed)
    order_rng = np.random.default_rng(seed)
    report = TTSTrainReport()

    prepared = []
    for item in items:
        durations = torch.tensor(item.durations, dtype=torch.long)
        x1 = torch.from_numpy(
            fit_mel_length(np.asarray(item.mel, dtype=np.float32),
                           int(durations.sum()))).unsqueeze(0)
        prepared.append((item, durations, x1))

    for step in range(steps):
        item, durations, x1 = prepared[order_rng.integers(len(prepared))]
        ling = model.encode_text(item.phonemes)
        speaker = torch.as_tensor(item.speaker_embedding, dtype=ling.dtype)
        hed_m = torch.as_tensor(np.asarray(item.hed_matrix), dtype=ling.dtype)
        cond = model.build_conditioning(ling, speaker, hed_m)
        log_dur_target = torch.log(durations.to(ling.dtype))
        dur_loss = torch.mean((model.duration(cond) - log_dur_target) ** 2)
        mu = model.average_mel(cond, durations).unsqueeze(0)
        prior_loss = torch.mean((mu - x1) ** 2)
        flow_loss = cfm_train_step(model.decoder, x1, mu, generator,
                                   config.sigma_min)
        loss = flow_loss + dur_loss + prior_weight * prior_loss
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        report.cfm_loss.append(float(flow_loss.detach()))
        report.duration_loss.append(float(dur_loss.detach()))
        report.prior_loss.append(float(prior_loss.detach()))
    model.eval()
    return model, report


# --- checkpoints ------------------------------------------------------------------

def save_tts_model(model: AcousticModel, path: str | Path) -> None:
    torch.save({
        "format_version": CHECKPOINT_VERSION,
        "kind": "tts",
        "config": asdict(model.config),
        "state_dict": model.state_dict(),
        "lexicon": model.lexicon,
    }, path)


def load_tts_model(path: str | Path) -> AcousticModel:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if blob.get("kind") != "tts":
        raise SchemaVersionMismatch(f"{path}: not an acoustic-model checkpoint")
    if blob.get("format_version") != CHECKPOINT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: version {blob.get('format_version')}, "
            f"reader supports {CHECKPOINT_VERSION}")
    config = TTSConfig(**blob["config"])
    model = AcousticModel(config)
    model.load_state_dict(blob["state_dict"])
    model.lexicon = dict(blob.get("lexicon", {}))
    model.eval()
    return model
