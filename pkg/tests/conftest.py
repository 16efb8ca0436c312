import json
import time

import numpy as np
import pytest
import torch

from emotts.corpus import INTENSITY_EMOTIONS
from emotts.hed import EDEdit, apply_edit, manual_hed
from emotts.intensity import IntensityModelConfig, IntensityModel, IntensityNet
from emotts.tts import TTSConfig, TTSTrainingItem, train_tts


def saturating_intensity_model(emotion: str, head_type: str = "SER",
                               input_dim: int = 8) -> IntensityModel:
    """A model whose output is exactly 1.0 for one emotion and 0.0 elsewhere.

    Saturated head biases (+/-600 logits, a 1200 gap) underflow the losing
    classes to exactly 0.0 after the tempered softmax, whatever the input.
    """
    config = IntensityModelConfig(input_dim=input_dim, hidden_dim=8,
                                  head_type=head_type, alpha=2.0,
                                  grl_enabled=False)
    torch.manual_seed(0)
    net = IntensityNet(config, n_adversary_classes=2)
    with torch.no_grad():
        for p in net.parameters():
            p.zero_()
        k = INTENSITY_EMOTIONS.index(emotion)
        if head_type == "SER":
            bias = torch.full((4,), -600.0)
            bias[k] = 600.0
            net.ser_head.bias.copy_(bias)
        else:
            for j, head in enumerate(net.epr_heads):
                head.bias.copy_(torch.tensor(
                    [-600.0, 600.0] if j == k else [600.0, -600.0]))
    net.eval()
    return IntensityModel(net=net, config=config, alpha=2.0, norm_stats=None,
                          adversary_classes=("a", "b"))


TOY_PHONES = ["M", "AA", "S", "IY", "T", "AA"] * 2
TOY_WORD_INDEX = [0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]
TOY_DURATIONS = [5, 6, 4, 6, 4, 7] * 2
TOY_INVENTORY = ("AA", "IY", "M", "S", "T")
TOY_VOICING = {"AA": 1.0, "IY": 1.4, "M": 0.6, "S": 0.0, "T": 0.0}
TOY_GAINS = [1.4, 0.1, 1.1, 0.07, 0.9, 0.18] * 2


def render_toy_utterance(seed: int, amplitude: float) -> np.ndarray:
    """Harmonic/noise audio matching TOY_PHONES with strong per-phone gain
    contrast, a low-frequency component, and a broadband bed, so every mel
    band carries the amplitude envelope."""
    rng = np.random.default_rng(seed)
    parts = []
    for sym, frames, gain in zip(TOY_PHONES, TOY_DURATIONS, TOY_GAINS):
        n = frames * 256
        t = np.arange(n) / 16000
        if TOY_VOICING[sym] > 0:
            f0 = 150 * TOY_VOICING[sym]
            seg = sum(a * np.sin(2 * np.pi * f0 * k * t
                                 + rng.uniform(0, 2 * np.pi))
                      for k, a in enumerate((1.0, 0.5, 0.3), start=1)) * 0.2
        else:
            seg = 0.12 * rng.standard_normal(n)
        seg = seg + 0.12 * np.sin(2 * np.pi * 45 * t
                                  + rng.uniform(0, 2 * np.pi))
        seg = seg + 0.3 * np.abs(seg).mean() * rng.standard_normal(n)
        parts.append(gain * seg)
    return amplitude * np.concatenate(parts)


@pytest.fixture(scope="session")
def correlation_model():
    """Overfit toy acoustic model whose training data injects the commanded
    utterance-Sad intensity as a monotone shift of mean log-energy (audio
    amplitude scaling of one shared utterance texture)."""
    from emotts import dsp

    speaker = np.random.default_rng(5).standard_normal(32).astype(np.float32)
    sad_values = [0.0, 0.25, 0.5, 0.75, 1.0, 0.1]
    items = []
    for i, s in enumerate(sad_values):
        hed = manual_hed(f"u{i}", TOY_PHONES, TOY_WORD_INDEX, fill=0.3)
        hed = apply_edit(hed, EDEdit(level="utterance", emotion="Sad",
                                     mode="set", value=s))
        audio = render_toy_utterance(0, 0.35 + 0.65 * s)
        items.append(TTSTrainingItem(
            phonemes=TOY_PHONES, durations=TOY_DURATIONS,
            mel=dsp.compute_mel(audio).matrix.astype(np.float32),
            hed_matrix=np.asarray(hed.matrix),
            speaker_embedding=speaker))
    config = TTSConfig(phone_inventory=TOY_INVENTORY, d_model=48, ff_dim=96,
                       speaker_dim=32, decoder_width=64, decoder_stages=2,
                       time_emb_dim=64)
    start = time.time()
    model, report = train_tts(items, config, steps=1500, seed=0, lr=1e-3)
    model, _ = train_tts(items, config, steps=800, seed=1, lr=3e-4,
                         model=model)
    return {"model": model, "report": report, "speaker": speaker,
            "phones": TOY_PHONES, "word_index": TOY_WORD_INDEX,
            "durations": TOY_DURATIONS, "train_seconds": time.time() - start}


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory):
    """Toy corpus with small trained checkpoints and cached distributions."""
    from click.testing import CliRunner
    from emotts import cli as cli_mod
    from emotts.toydata import generate_toy_corpus

    root = tmp_path_factory.mktemp("demo")
    generate_toy_corpus(root, n_speakers=2, utterances_per_cell=4, seed=0)
    config_path = str(root / "config.json")
    runner = CliRunner()
    for cmd, args in [
        (cli_mod.train_extractor, ["--config", config_path, "--head", "EPR",
                                   "--epochs", "6", "--seed", "0"]),
        (cli_mod.extract_hed_cmd, ["--config", config_path]),
        (cli_mod.train_tts_cmd, ["--config", config_path, "--steps", "60",
                                 "--seed", "0"]),
    ]:
        result = runner.invoke(cmd, args, catch_exceptions=False)
        assert result.exit_code == 0, result.output
    return root


@pytest.fixture()
def toy_alignment_doc():
    return {
        "utterance_id": "fix_0001",
        "words": [
            {"text": "mama", "start": 0.10, "end": 0.45},
            {"text": "see", "start": 0.50, "end": 0.80},
            {"text": "too", "start": 0.85, "end": 1.20},
        ],
        "phones": [
            {"symbol": "m", "start": 0.10, "end": 0.20, "word_index": 0},
            {"symbol": "aa", "start": 0.20, "end": 0.32, "word_index": 0},
            {"symbol": "m", "start": 0.32, "end": 0.38, "word_index": 0},
            {"symbol": "aa", "start": 0.38, "end": 0.45, "word_index": 0},
            {"symbol": "s", "start": 0.50, "end": 0.62, "word_index": 1},
            {"symbol": "iy", "start": 0.62, "end": 0.80, "word_index": 1},
            {"symbol": "t", "start": 0.85, "end": 0.95, "word_index": 2},
            {"symbol": "uw", "start": 0.95, "end": 1.10, "word_index": 2},
            {"symbol": "sil", "start": 1.10, "end": 1.20, "word_index": 2},
        ],
    }


def write_alignment(tmp_path, doc):
    path = tmp_path / f"{doc['utterance_id']}.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
