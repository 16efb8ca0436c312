"""Segment-level emotion-intensity extractors.

A shared two-layer feature extractor feeds either a 4-way emotion classifier
(SER) or four independent present/absent classifiers (EPR). Classification
probabilities from a temperature-flattened softmax are read as emotion
intensities. An optional adversary head behind a gradient-reversal layer
scrubs speaker/gender cues from the shared extractor.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .corpus import INTENSITY_EMOTIONS
from .containers import SchemaVersionMismatch
from .dsp import FrameFeatures, NormStats, fit_norm_stats, frames_in_span

EPR_PRESENT_INDEX = 1  # binary heads emit (absent, present) logits

ALPHA_GRID = tuple(round(1.1 + 0.1 * k, 1) for k in range(20))
ALPHA_HISTOGRAM_BINS = 10

NEAR_CHANCE_TOLERANCE = 0.10

CHECKPOINT_VERSION = 1

LEVELS = ("utterance", "word", "phoneme")


class IntensityError(Exception):
    pass


class NonFinite(IntensityError):
    pass


class EmptyCalibrationSet(IntensityError):
    pass


class EmptySegment(IntensityError):
    pass


class DimensionMismatch(IntensityError):
    pass


class NoValidationData(IntensityError):
    pass


class DivergedLoss(IntensityError):
    pass


@dataclass
class IntensityModelConfig:
    input_dim: int
    hidden_dim: int = 256
    head_type: str = "SER"  # "SER" | "EPR"
    alpha: float = 2.0
    grl_enabled: bool = True
    grl_scale: float = 0.5
    adversary_target: str = "speaker"  # "speaker" | "gender"

    def __post_init__(self):
        if self.head_type not in ("SER", "EPR"):
            raise ValueError(f"head_type must be SER or EPR, got {self.head_type}")
        if not (ALPHA_GRID[0] <= self.alpha <= ALPHA_GRID[-1]):
            raise ValueError(f"alpha {self.alpha} outside [{ALPHA_GRID[0]}, {ALPHA_GRID[-1]}]")
        if self.grl_scale <= 0:
            raise ValueError("grl_scale must be positive")
        if self.adversary_target not in ("speaker", "gender"):
            raise ValueError("adversary_target must be speaker or gender")


@dataclass
class SegmentSample:
    """One training/evaluation segment with its provenance labels."""

    features: np.ndarray          # (frames, D) or (D,)
    emotion: str                  # utterance label, may be "Neutral"
    level: str                    # "utterance" | "word" | "phoneme"
    speaker: str
    gender: str = "unknown"

    def frame_matrix(self) -> np.ndarray:
        arr = np.asarray(self.features, dtype=np.float64)
        return arr[None, :] if arr.ndim == 1 else arr


@dataclass
class TrainReport:
    epoch_emotion_loss: list[float] = field(default_factory=list)
    epoch_adversary_loss: list[float] = field(default_factory=list)
    val_emotion_accuracy: list[float] = field(default_factory=list)
    val_adversary_accuracy: list[float] = field(default_factory=list)
    selected_epoch: int = -1
    adversary_chance: float = 0.0
    post_stabilization_adversary_accuracy: float | None = None


def tempered_softmax(logits: np.ndarray, alpha: float) -> np.ndarray:
    """Softmax with base ``alpha`` instead of e: a^z_i / sum_j a^z_j.

    Computed as exp(z * ln(a) - logsumexp(z * ln(a))) for stability. The
    last axis is the class axis.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NonFinite("logits contain non-finite values")
    scaled = z * math.log(alpha)
    shifted = scaled - scaled.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _intensity_values(logits: np.ndarray, head_type: str, alpha: float) -> np.ndarray:
    """Flat array of intensity values implied by raw logits at a given alpha."""
    if head_type == "SER":
        if logits.ndim != 2:
            raise DimensionMismatch(f"SER logits must be (N, K), got {logits.shape}")
        return tempered_softmax(logits, alpha).reshape(-1)
    if logits.ndim == 2 and logits.shape[1] == 2:
        logits = logits[:, None, :]
    if logits.ndim != 3 or logits.shape[-1] != 2:
        raise DimensionMismatch(f"EPR logits must be (N, heads, 2), got {logits.shape}")
    return tempered_softmax(logits, alpha)[..., EPR_PRESENT_INDEX].reshape(-1)


def select_alpha(logits: np.ndarray, head_type: str = "SER") -> float:
    """Pick the softmax base that flattens the intensity histogram.

    Evaluates the 20-point grid 1.1 .. 3.0 (step 0.1); for each candidate
    the intensities of the calibration logits are binned into 10 equal bins
    on [0, 1] and scored by KL(uniform || empirical). Ties break toward the
    smaller alpha.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise EmptyCalibrationSet("no calibration logits")
    best_alpha, best_kl = ALPHA_GRID[0], np.inf
    uniform = 1.0 / ALPHA_HISTOGRAM_BINS
    for alpha in ALPHA_GRID:
        values = _intensity_values(logits, head_type, alpha)
        counts, _ = np.histogram(values, bins=ALPHA_HISTOGRAM_BINS, range=(0.0, 1.0))
        q = counts / counts.sum()
        with np.errstate(divide="ignore"):
            kl = float(np.sum(np.where(q > 0, uniform * np.log(uniform / q), np.inf)))
        if kl < best_kl:
            best_alpha, best_kl = alpha, kl
    return best_alpha


class _GradReverse(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, scale):
        ctx.scale = scale
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output):
        return -ctx.scale * grad_output, None


def grad_reverse(x: torch.Tensor, scale: float = 0.5) -> torch.Tensor:
    """Identity forward; backward multiplies the gradient by ``-scale``."""
    return _GradReverse.apply(x, scale)


class GradientReversal(nn.Module):
    def __init__(self, scale: float = 0.5):
        super().__init__()
        self.scale = scale

    def forward(self, x):
        return grad_reverse(x, self.scale)


class IntensityNet(nn.Module):
    """Two-layer extractor with SER/EPR heads and an adversary probe."""

    def __init__(self, config: IntensityModelConfig, n_adversary_classes: int):
        super().__init__()
        d, h = config.input_dim, config.hidden_dim
        self.config = config
        self.extractor = nn.Sequential(nn.Linear(d, h), nn.ReLU(), nn.Linear(h, h))
        if config.head_type == "SER":
            self.ser_head = nn.Linear(h, len(INTENSITY_EMOTIONS))
        else:
            self.epr_heads = nn.ModuleList(
                nn.Linear(h, 2) for _ in INTENSITY_EMOTIONS)
        self.adversary = nn.Linear(h, max(n_adversary_classes, 2))

    def pool(self, frames: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        """Mean-pool extractor outputs over valid frames.

        frames: (B, T, D); mask: (B, T) bool or None for all-valid.
        """
        h = self.extractor(frames)
        if mask is None:
            return h.mean(dim=1)
        m = mask.unsqueeze(-1).to(h.dtype)
        return (h * m).sum(dim=1) / m.sum(dim=1).clamp_min(1.0)

    def emotion_logits(self, pooled: torch.Tensor) -> torch.Tensor:
        """(B, 4) for SER; (B, 4, 2) for EPR."""
        if self.config.head_type == "SER":
            return self.ser_head(pooled)
        return torch.stack([head(pooled) for head in self.epr_heads], dim=1)

    def adversary_logits(self, pooled: torch.Tensor) -> torch.Tensor:
        if self.config.grl_enabled:
            pooled = grad_reverse(pooled, self.config.grl_scale)
        else:
            pooled = pooled.detach()
        return self.adversary(pooled)


@dataclass
class IntensityModel:
    """A trained extractor bundled with everything inference needs."""

    net: IntensityNet
    config: IntensityModelConfig
    alpha: float
    norm_stats: NormStats | None = None
    adversary_classes: tuple[str, ...] = ()
    label_order: tuple[str, ...] = INTENSITY_EMOTIONS


def _segment_frames(features, span) -> np.ndarray:
    if isinstance(features, FrameFeatures):
        if span is None:
            return features.matrix
        idx = frames_in_span(features, span[0], span[1])
        if idx.size == 0:
            raise EmptySegment(f"no frames inside [{span[0]:.3f}, {span[1]:.3f})")
        return features.matrix[idx]
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[0] == 0:
        raise EmptySegment("segment has no frames")
    return arr


def segment_logits(model: IntensityModel, features, span=None) -> np.ndarray:
    """Raw head logits for one segment (pre-softmax)."""
    frames = _segment_frames(features, span)
    if frames.shape[1] != model.config.input_dim:
        raise DimensionMismatch(
            f"features have dim {frames.shape[1]}, model expects "
            f"{model.config.input_dim}")
    if model.norm_stats is not None:
        frames = (frames - model.norm_stats.mean) / model.norm_stats.std
    with torch.no_grad():
        x = torch.from_numpy(np.ascontiguousarray(frames, dtype=np.float32))
        pooled = model.net.pool(x.unsqueeze(0))
        return model.net.emotion_logits(pooled).squeeze(0).numpy()


def forward_intensity(model: IntensityModel, features, span=None) -> np.ndarray:
    """Calibrated 4-vector of intensities (Angry, Happy, Sad, Surprise).

    SER heads give a distribution over the four emotions; EPR heads give
    four independent presence probabilities.
    """
    logits = segment_logits(model, features, span)
    if model.config.head_type == "SER":
        return tempered_softmax(logits, model.alpha)
    return tempered_softmax(logits, model.alpha)[:, EPR_PRESENT_INDEX]


def calibrate_alpha(model: IntensityModel,
                    calibration: Sequence[SegmentSample]) -> float:
    """Select and install the model's alpha from training-segment logits."""
    if len(calibration) == 0:
        raise EmptyCalibrationSet("empty calibration set")
    logits = np.stack([segment_logits(model, s.frame_matrix()) for s in calibration])
    alpha = select_alpha(logits, model.config.head_type)
    model.alpha = alpha
    model.config.alpha = alpha
    return alpha


# --- training -----------------------------------------------------------------

def _pad_batch(samples: list[np.ndarray]) -> tuple[torch.Tensor, torch.Tensor]:
    max_t = max(s.shape[0] for s in samples)
    dim = samples[0].shape[1]
    x = np.zeros((len(samples), max_t, dim), dtype=np.float32)
    mask = np.zeros((len(samples), max_t), dtype=bool)
    for i, s in enumerate(samples):
        x[i, :s.shape[0]] = s
        mask[i, :s.shape[0]] = True
    return torch.from_numpy(x), torch.from_numpy(mask)


def _level_weights(samples: Sequence[SegmentSample]) -> np.ndarray:
    counts = {lvl: 0 for lvl in LEVELS}
    for s in samples:
        counts[s.level] = counts.get(s.level, 0) + 1
    raw = np.array([1.0 / counts[s.level] for s in samples])
    return raw / raw.mean()


def _adversary_label(sample: SegmentSample, target: str) -> str:
    return sample.speaker if target == "speaker" else sample.gender


class _Trainer:
    def __init__(self, train, val, config, seed, batch_size, lr, lr_decay,
                 lr_step, adversary_refresh_steps=5, adversary_lr=3e-3):
        self.config = config
        classes = sorted({_adversary_label(s, config.adversary_target) for s in train})
        self.adversary_classes = tuple(classes)
        torch.manual_seed(seed)
        self.net = IntensityNet(config, len(classes))
        self.rng = np.random.default_rng(seed)
        self.optimizer = torch.optim.Adam(self.net.parameters(), lr=lr)
        self.scheduler = torch.optim.lr_scheduler.StepLR(
            self.optimizer, step_size=lr_step, gamma=lr_decay)
        # Extra adversary-only refreshes keep the probe near-optimal, so the
        # reversed gradient keeps pointing along real leakage instead of
        # dying once the lagging adversary is merely confused.
        self.adversary_refresh_steps = adversary_refresh_steps if config.grl_enabled else 0
        self.adversary_optimizer = torch.optim.Adam(
            self.net.adversary.parameters(), lr=adversary_lr)

        self.norm_stats = fit_norm_stats(
            np.concatenate([s.frame_matrix() for s in train], axis=0))
        self.train_feats = [self._normed(s) for s in train]
        self.val_feats = [self._normed(s) for s in val]
        self.train, self.val = list(train), list(val)
        self.weights = _level_weights(train)
        self.class_index = {c: i for i, c in enumerate(classes)}
        self.batch_size = batch_size

    def _normed(self, sample: SegmentSample) -> np.ndarray:
        return ((sample.frame_matrix() - self.norm_stats.mean)
                / self.norm_stats.std)

    def _emotion_targets(self, batch_idx) -> tuple[torch.Tensor, torch.Tensor]:
        if self.config.head_type == "SER":
            ids = [INTENSITY_EMOTIONS.index(self.train[i].emotion)
                   if self.train[i].emotion in INTENSITY_EMOTIONS else -1
                   for i in batch_idx]
            return torch.tensor(ids), torch.tensor(
                [self.weights[i] for i in batch_idx], dtype=torch.float32)
        presence = [[1 if self.train[i].emotion == e else 0
                     for e in INTENSITY_EMOTIONS] for i in batch_idx]
        return torch.tensor(presence), torch.tensor(
            [self.weights[i] for i in batch_idx], dtype=torch.float32)

    def _emotion_loss(self, logits, targets, weights) -> torch.Tensor:
        if self.config.head_type == "SER":
            keep = targets >= 0
            if not bool(keep.any()):
                return logits.sum() * 0.0
            ce = nn.functional.cross_entropy(
                logits[keep], targets[keep], reduction="none")
            w = weights[keep]
            return (ce * w).sum() / w.sum()
        ce = nn.functional.cross_entropy(
            logits.reshape(-1, 2), targets.reshape(-1), reduction="none")
        w = weights.repeat_interleave(len(INTENSITY_EMOTIONS))
        return (ce * w).sum() / w.sum()

    def _adversary_targets(self, idx) -> torch.Tensor:
        return torch.tensor(
            [self.class_index[_adversary_label(self.train[i],
                                               self.config.adversary_target)]
             for i in idx])

    def run_epoch(self) -> tuple[float, float]:
        self.net.train()
        order = self.rng.permutation(len(self.train))
        emo_sum = adv_sum = 0.0
        n_batches = 0
        for start in range(0, len(order), self.batch_size):
            idx = order[start:start + self.batch_size].tolist()
            x, mask = _pad_batch([self.train_feats[i] for i in idx])
            pooled = self.net.pool(x, mask)
            targets, weights = self._emotion_targets(idx)
            emo_loss = self._emotion_loss(self.net.emotion_logits(pooled),
                                          targets, weights)
            adv_targets = self._adversary_targets(idx)
            adv_loss = nn.functional.cross_entropy(
                self.net.adversary_logits(pooled), adv_targets)
            loss = emo_loss + adv_loss
            if not torch.isfinite(loss):
                raise DivergedLoss("training loss is not finite")
            self.optimizer.zero_grad()
            loss.backward()
            self.optimizer.step()
            for _ in range(self.adversary_refresh_steps):
                with torch.no_grad():
                    frozen = self.net.pool(x, mask)
                refresh_loss = nn.functional.cross_entropy(
                    self.net.adversary(frozen), adv_targets)
                self.adversary_optimizer.zero_grad()
                refresh_loss.backward()
                self.adversary_optimizer.step()
            emo_sum += float(emo_loss.detach())
            adv_sum += float(adv_loss.detach())
            n_batches += 1
        self.scheduler.step()
        return emo_sum / n_batches, adv_sum / n_batches

    @torch.no_grad()
    def evaluate(self) -> tuple[float, float]:
        self.net.eval()
        emo_hits = emo_total = adv_hits = 0
        for i, sample in enumerate(self.val):
            x, mask = _pad_batch([self.val_feats[i]])
            pooled = self.net.pool(x, mask)
            logits = self.net.emotion_logits(pooled).squeeze(0)
            if self.config.head_type == "SER":
                if sample.emotion in INTENSITY_EMOTIONS:
                    emo_total += 1
                    if int(logits.argmax()) == INTENSITY_EMOTIONS.index(sample.emotion):
                        emo_hits += 1
            else:
                for k, e in enumerate(INTENSITY_EMOTIONS):
                    emo_total += 1
                    predicted = int(logits[k].argmax()) == EPR_PRESENT_INDEX
                    if predicted == (sample.emotion == e):
                        emo_hits += 1
            adv = self.net.adversary(pooled).squeeze(0)
            label = _adversary_label(sample, self.config.adversary_target)
            if self.class_index.get(label, -1) == int(adv.argmax()):
                adv_hits += 1
        emo_acc = emo_hits / emo_total if emo_total else 0.0
        return emo_acc, adv_hits / len(self.val)

    def stabilized_leakage(self, snapshot: dict, epochs: int,
                           seed: int) -> float:
        """Leakage probe: freeze the snapshot's extractor, train a fresh
        adversary alone, and return its validation accuracy."""
        torch.manual_seed(seed)
        probe = IntensityNet(self.config, len(self.adversary_classes))
        probe.load_state_dict(snapshot)
        probe.adversary.reset_parameters()
        probe.eval()
        opt = torch.optim.Adam(probe.adversary.parameters(), lr=1e-3)
        rng = np.random.default_rng(seed)
        pooled_train = []
        with torch.no_grad():
            for feats in self.train_feats:
                x, mask = _pad_batch([feats])
                pooled_train.append(probe.pool(x, mask).squeeze(0))
        pooled_train = torch.stack(pooled_train)
        all_targets = self._adversary_targets(range(len(self.train)))
        for _ in range(epochs):
            order = rng.permutation(len(self.train))
            for start in range(0, len(order), self.batch_size):
                idx = torch.from_numpy(order[start:start + self.batch_size])
                loss = nn.functional.cross_entropy(
                    probe.adversary(pooled_train[idx]), all_targets[idx])
                opt.zero_grad()
                loss.backward()
                opt.step()
        hits = 0
        with torch.no_grad():
            for i, sample in enumerate(self.val):
                x, mask = _pad_batch([self.val_feats[i]])
                pred = int(probe.adversary(probe.pool(x, mask)).argmax())
                label = _adversary_label(sample, self.config.adversary_target)
                if self.class_index.get(label, -1) == pred:
                    hits += 1
        return hits / len(self.val)


def train_intensity_model(train: Sequence[SegmentSample],
                          val: Sequence[SegmentSample],
                          config: IntensityModelConfig,
                          seed: int = 0,
                          max_epochs: int = 200,
                          patience: int = 30,
                          batch_size: int = 16,
                          lr: float = 1e-3,
                          lr_decay: float = 0.8,
                          lr_step: int = 5,
                          stabilization_epochs: int = 100,
                          calibrate: bool = True,
                          ) -> tuple[IntensityModel, TrainReport]:
    """Train an intensity extractor on mixed-level segments.

    Cross-entropy with per-sample weights inversely proportional to the
    segment count of the sample's level; Adam at 1e-3, batch 16, learning
    rate decayed by 0.8 every 5 epochs. With the reversal layer enabled,
    the residual leakage of the five best emotion checkpoints is measured
    by freezing the extractor and training a fresh adversary alone for
    ``stabilization_epochs``; the selection maximizes emotion accuracy
    subject to that stabilized accuracy sitting near chance, falling back
    to the least leaky of the shortlist.
    """
    if not train:
        raise IntensityError("empty training set")
    if not val:
        raise NoValidationData("empty validation set")
    torch.set_num_threads(1)
    trainer = _Trainer(train, val, config, seed, batch_size, lr, lr_decay, lr_step)
    report = TrainReport()
    report.adversary_chance = 1.0 / max(len(trainer.adversary_classes), 1)

    snapshots: dict[int, dict] = {}
    best_acc, best_epoch = -1.0, -1
    for epoch in range(max_epochs):
        emo_loss, adv_loss = trainer.run_epoch()
        emo_acc, adv_acc = trainer.evaluate()
        report.epoch_emotion_loss.append(emo_loss)
        report.epoch_adversary_loss.append(adv_loss)
        report.val_emotion_accuracy.append(emo_acc)
        report.val_adversary_accuracy.append(adv_acc)
        snapshots[epoch] = copy.deepcopy(trainer.net.state_dict())
        if emo_acc > best_acc:
            best_acc, best_epoch = emo_acc, epoch
        if epoch - best_epoch >= patience:
            break

    accs = report.val_emotion_accuracy
    shortlist = sorted(range(len(accs)), key=lambda e: (-accs[e], e))[:5]
    if config.grl_enabled:
        leakage = {e: trainer.stabilized_leakage(snapshots[e],
                                                 stabilization_epochs,
                                                 seed + 1000 + e)
                   for e in shortlist}
        chance = report.adversary_chance
        qualifying = [e for e in shortlist
                      if abs(leakage[e] - chance) <= NEAR_CHANCE_TOLERANCE]
        if qualifying:
            # Ties on accuracy break toward the later epoch: more reversal
            # training means a better-scrubbed extractor.
            selected = max(qualifying, key=lambda e: (accs[e], e))
        else:
            selected = min(shortlist, key=lambda e: (leakage[e], -accs[e]))
        report.post_stabilization_adversary_accuracy = leakage[selected]
    else:
        selected = shortlist[0]
    report.selected_epoch = selected
    trainer.net.load_state_dict(snapshots[selected])
    trainer.net.eval()

    model = IntensityModel(net=trainer.net, config=config, alpha=config.alpha,
                           norm_stats=trainer.norm_stats,
                           adversary_classes=trainer.adversary_classes)
    if calibrate:
        calibrate_alpha(model, train)
    return model, report


def presence_accuracy(model: IntensityModel,
                      samples: Sequence[SegmentSample]) -> dict:
    """Presence (intensity >= 0.5) and 4-way argmax accuracy tables.

    Returns ``{"presence": {emotion: {level: acc}}, "argmax": {level: acc}}``
    over the labeled segments; argmax rows skip Neutral segments.
    """
    if not samples:
        raise IntensityError("empty test set")
    intensities = [forward_intensity(model, s.frame_matrix()) for s in samples]
    presence: dict[str, dict[str, float]] = {}
    for k, emotion in enumerate(INTENSITY_EMOTIONS):
        presence[emotion] = {}
        for level in LEVELS:
            member = [(iv, s) for iv, s in zip(intensities, samples)
                      if s.level == level]
            if not member:
                continue
            hits = sum(1 for iv, s in member
                       if (iv[k] >= 0.5) == (s.emotion == emotion))
            presence[emotion][level] = hits / len(member)
    argmax: dict[str, float] = {}
    for level in LEVELS:
        member = [(iv, s) for iv, s in zip(intensities, samples)
                  if s.level == level and s.emotion in INTENSITY_EMOTIONS]
        if not member:
            continue
        hits = sum(1 for iv, s in member
                   if INTENSITY_EMOTIONS[int(np.argmax(iv))] == s.emotion)
        argmax[level] = hits / len(member)
    return {"presence": presence, "argmax": argmax}


# --- checkpoints ----------------------------------------------------------------

def save_intensity_model(model: IntensityModel, path: str | Path) -> None:
    torch.save({
        "format_version": CHECKPOINT_VERSION,
        "kind": "intensity",
        "config": asdict(model.config),
        "state_dict": model.net.state_dict(),
        "alpha": model.alpha,
        "norm_stats": model.norm_stats.to_document() if model.norm_stats else None,
        "adversary_classes": list(model.adversary_classes),
        "label_order": list(model.label_order),
    }, path)


def load_intensity_model(path: str | Path) -> IntensityModel:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if blob.get("kind") != "intensity":
        raise SchemaVersionMismatch(f"{path}: not an intensity checkpoint")
    if blob.get("format_version") != CHECKPOINT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: version {blob.get('format_version')}, "
            f"reader supports {CHECKPOINT_VERSION}")
    config = IntensityModelConfig(**blob["config"])
    net = IntensityNet(config, len(blob["adversary_classes"]))
    net.load_state_dict(blob["state_dict"])
    net.eval()
    stats = NormStats.from_document(blob["norm_stats"]) if blob["norm_stats"] else None
    return IntensityModel(net=net, config=config, alpha=blob["alpha"],
                          norm_stats=stats,
                          adversary_classes=tuple(blob["adversary_classes"]),
                          label_order=tuple(blob["label_order"]))
