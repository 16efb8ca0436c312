import statistics

import numpy as np
import pytest
from scipy.signal import find_peaks, peak_prominences
from scipy.spatial.distance import cdist

from emotts import evaluation as ev
from emotts.corpus import INTENSITY_EMOTIONS
from emotts.hed import manual_hed


def tone(freq, seconds=1.0):
    t = np.arange(int(seconds * 16000)) / 16000
    return np.sin(2 * np.pi * freq * t)


class TestMcd:
    def test_identical_is_zero(self):
        mel = np.random.default_rng(0).normal(size=(100, 40))
        assert ev.mcd(mel, mel) == 0.0

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(100, 30)), rng.normal(size=(100, 37))
        assert abs(ev.mcd(a, b) - ev.mcd(b, a)) < 1e-9

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        assert ev.mcd(rng.normal(size=(100, 20)),
                      rng.normal(size=(100, 25))) >= 0.0

    def test_shifted_input_beats_naive_alignment(self):
        rng = np.random.default_rng(3)
        base = rng.normal(size=(100, 50))
        shifted = np.concatenate([base[:, 3:], base[:, -1:] * np.ones((1, 3))],
                                 axis=1)
        ca, cb = ev.mel_cepstra(base), ev.mel_cepstra(shifted)
        naive = float(np.mean(np.linalg.norm(ca - cb, axis=1)))
        assert ev.mcd(base, shifted) < ev.MCD_CONSTANT * naive

    def test_dtw_cost_bounded_by_diagonal(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=(20, 4)), rng.normal(size=(20, 4))
        cost = cdist(a, b)
        _, total = ev.dtw_path(cost)
        assert total <= float(np.trace(cost)) + 1e-9

    def test_empty_rejected(self):
        with pytest.raises(ev.EmptyInput):
            ev.mcd(np.zeros((100, 0)), np.zeros((100, 5)))


class TestPitchEnergy:
    def test_identical_audio(self):
        r = ev.pitch_energy_distortion(tone(200), tone(200))
        assert r.pitch_distortion == 0.0
        assert r.energy_distortion == 0.0

    def test_tone_pair_oracle(self):
        r = ev.pitch_energy_distortion(tone(200), tone(210))
        assert r.pitch_distortion == pytest.approx(10.0, abs=1.0)

    def test_silence_reports_missing_pitch(self):
        r = ev.pitch_energy_distortion(np.zeros(16000), np.zeros(16000))
        assert r.pitch_distortion is None
        assert r.energy_distortion == 0.0


class TestSecs:
    def test_identical_and_opposite(self):
        v = np.random.default_rng(0).normal(size=64)
        assert ev.secs(v, v) == pytest.approx(1.0, abs=1e-12)
        assert ev.secs(v, -v) == pytest.approx(-1.0, abs=1e-12)

    def test_orthogonal_pair(self):
        a = np.zeros(16)
        a[0] = 3.0
        b = np.zeros(16)
        b[5] = 2.0
        assert abs(ev.secs(a, b)) <= 1e-6

    def test_zero_vector_rejected(self):
        with pytest.raises(ev.ZeroVector):
            ev.secs(np.zeros(8), np.ones(8))


def _base_hed():
    return manual_hed("case", ["A", "B", "C"], [0, 0, 1], fill=0.3)


class TestControllability:
    def test_oracle_probe_identity(self):
        # synth returns the commanded utterance intensities; probe is identity
        def synth(case, hed):
            return hed.level_block("utterance")[0]

        def probe(artifact):
            return np.asarray(artifact, dtype=np.float64)

        report = ev.controllability_score(probe, synth, [(None, _base_hed())])
        assert report.positive == 1.0
        assert report.negative == 0.0
        assert report.score == 1.0
        # off-diagonal predictions stay constant across each sweep
        assert report.skipped_pairs == 12

    def test_constant_probe_flags_undefined(self):
        def synth(case, hed):
            return hed

        def probe(_):
            return np.full(4, 0.5)

        report = ev.controllability_score(probe, synth, [(None, _base_hed())])
        assert report.evaluated_pairs == 0
        assert report.skipped_pairs == 16
        assert report.score == 0.0
        assert np.all(np.isnan(report.correlation_matrix))

    def test_scale_invariance(self):
        def synth(case, hed):
            return hed.level_block("utterance")[0]

        def probe_scaled(artifact):
            return 7.3 * np.asarray(artifact, dtype=np.float64)

        report = ev.controllability_score(probe_scaled, synth,
                                          [(None, _base_hed())])
        assert report.score == pytest.approx(1.0, abs=1e-12)

    def test_anticorrelated_counts_into_positive_not_negative(self):
        def synth(case, hed):
            return hed.level_block("utterance")[0]

        def probe(artifact):
            a = np.asarray(artifact, dtype=np.float64)
            return 1.0 - a  # perfectly anti-correlated

        report = ev.controllability_score(probe, synth, [(None, _base_hed())])
        assert report.positive == pytest.approx(-1.0)
        assert report.negative == 0.0  # negatives floored at zero


def speaker_codes(n=10_000, n_speakers=10, seed=0):
    rng = np.random.default_rng(seed)
    speakers = rng.integers(0, n_speakers, size=n)
    codes = rng.normal(size=(n, 12))
    codes[:, 0] = speakers
    return codes, speakers


def oracle_mig(codes, factors, bins):
    """Independent brute-force MIG with explicit histogram loops."""
    factors = np.asarray(factors)
    classes = sorted(set(factors.tolist()))
    f_idx = np.array([classes.index(v) for v in factors])
    n = len(f_idx)
    p_f = np.bincount(f_idx) / n
    h_f = -sum(p * np.log(p) for p in p_f if p > 0)
    mis = []
    for j in range(codes.shape[1]):
        v = codes[:, j]
        edges = np.quantile(v, [k / bins for k in range(1, bins)])
        assign = np.array([sum(1 for e in edges if e <= x) for x in v])
        joint = np.zeros((len(classes), assign.max() + 1))
        for a, b in zip(f_idx, assign):
            joint[a, b] += 1
        joint /= n
        mi = 0.0
        for a in range(joint.shape[0]):
            for b in range(joint.shape[1]):
                if joint[a, b] > 0:
                    mi += joint[a, b] * np.log(
                        joint[a, b] / (joint[a].sum() * joint[:, b].sum()))
        mis.append(mi)
    mis.sort(reverse=True)
    return (mis[0] - mis[1]) / h_f


class TestMig:
    @pytest.mark.parametrize("bins", [30, 50, 100])
    def test_speaker_dimension_oracle(self, bins):
        codes, speakers = speaker_codes()
        value = ev.mig(codes, speakers, bins)
        assert value >= 0.9
        assert abs(value - oracle_mig(codes, speakers, bins)) <= 1e-3

    def test_independent_codes_near_zero(self):
        rng = np.random.default_rng(1)
        speakers = rng.integers(0, 10, size=10_000)
        codes = rng.normal(size=(10_000, 12))
        assert ev.mig(codes, speakers, 50) <= 0.05

    def test_mutual_information_bounds(self):
        rng = np.random.default_rng(2)
        a = rng.integers(0, 5, size=2000)
        b = rng.integers(0, 7, size=2000)
        mi = ev.discrete_mutual_information(a, b)
        assert mi >= 0.0
        assert mi <= min(ev.discrete_entropy(a), ev.discrete_entropy(b)) + 1e-9

    def test_degenerate_factor(self):
        with pytest.raises(ev.DegenerateFactor):
            ev.mig(np.random.default_rng(0).normal(size=(100, 3)),
                   np.zeros(100), 10)

    def test_requires_enough_samples(self):
        with pytest.raises(ev.EvalError):
            ev.mig(np.zeros((10, 3)), np.arange(10) % 2, 50)


def oracle_trajectory_stats(s):
    """Second, independent implementation (stdlib + scipy + polyfit)."""
    s = np.asarray(s, dtype=np.float64)
    n = len(s)
    mean = sum(s) / n
    med = statistics.median(s.tolist())
    std = float(np.sqrt(sum((x - mean) ** 2 for x in s) / n))
    iqr = float(np.percentile(s, 75) - np.percentile(s, 25))
    slope = float(np.polyfit(np.arange(n), s, 1)[0]) if n > 1 else 0.0
    if n >= 3:
        peaks, _ = find_peaks(s)
        proms = peak_prominences(s, peaks)[0] if len(peaks) else []
    else:
        peaks, proms = [], []
    den = sum((x - mean) ** 2 for x in s)
    lag1 = (float(sum((s[i] - mean) * (s[i + 1] - mean) for i in range(n - 1))
                  / den) if den > 0 else 0.0)
    return np.array([mean, med, std, max(s), min(s), iqr, slope,
                     float(len(peaks)),
                     float(np.mean(proms)) if len(proms) else 0.0, lag1])


class TestTrajectory:
    def test_constant_series(self):
        out = ev.trajectory_stats(np.full(9, 2.5))
        assert out.tolist() == [2.5, 2.5, 0.0, 2.5, 2.5, 0.0, 0.0, 0.0, 0.0, 0.0]

    def test_single_peak_hand_case(self):
        out = ev.trajectory_stats(np.array([0.0, 1.0, 0.0]))
        assert out[6] == 0.0       # slope
        assert out[7] == 1.0       # n_peaks
        assert out[8] == 1.0       # prominence

    def test_matches_independent_implementation(self):
        rng = np.random.default_rng(123)
        for _ in range(1000):
            n = int(rng.integers(1, 60))
            s = rng.normal(size=n) * rng.uniform(0.1, 10)
            assert np.max(np.abs(ev.trajectory_stats(s)
                                 - oracle_trajectory_stats(s))) <= 1e-9

    def test_summary_is_40_dims(self):
        rng = np.random.default_rng(5)
        series = rng.random((12, 4))
        out = ev.summarize_trajectory(series)
        assert out.shape == (40,)
        assert np.array_equal(out[:10], ev.trajectory_stats(series[:, 0]))
        assert np.array_equal(out[30:], ev.trajectory_stats(series[:, 3]))

    def test_short_series_defaults(self):
        out = ev.trajectory_stats(np.array([4.0]))
        assert out[6] == 0.0 and out[7] == 0.0 and out[9] == 0.0


class TestProbeLeakage:
    def _features(self, n=200, seed=0, informative=False):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, 4, size=n)
        x = rng.normal(size=(n, 10))
        if informative:
            # one indicator dimension per class keeps every one-vs-rest
            # problem linearly separable
            x[np.arange(n), labels] += 4.0
        return x, labels

    @pytest.mark.parametrize("kind", ["rf", "lasso"])
    def test_permuted_labels_near_chance(self, kind):
        x, labels = self._features(seed=1)
        out = ev.disentanglement_explicitness(x, labels, kind=kind, seed=0)
        assert abs(out.explicitness_auc - 0.5) < 0.12
        assert abs(out.explicitness_score) < 0.24

    @pytest.mark.parametrize("kind", ["rf", "lasso"])
    def test_deterministic_label_feature_near_max(self, kind):
        x, labels = self._features(seed=2, informative=True)
        out = ev.disentanglement_explicitness(x, labels, kind=kind, seed=0)
        assert out.explicitness_auc > 0.95
        assert out.explicitness_score > 0.9
        assert out.disentanglement > 0.0

    def test_single_class_rejected(self):
        x = np.random.default_rng(0).normal(size=(40, 5))
        with pytest.raises(ev.SingleClass):
            ev.disentanglement_explicitness(x, np.zeros(40, dtype=int))

    def test_explicitness_orders_leakage_strength(self):
        # three feature sets with decreasing speaker signal must rank in the
        # same order the reported tables do: stronger leakage scores higher
        rng = np.random.default_rng(7)
        labels = rng.integers(0, 4, size=240)
        scores = []
        for strength in (3.0, 0.8, 0.0):
            x = rng.normal(size=(240, 8))
            x[np.arange(240), labels % 8] += strength
            out = ev.disentanglement_explicitness(x, labels, kind="lasso",
                                                  seed=0)
            scores.append(out.explicitness_score)
        assert scores[0] > scores[1] > scores[2]

    def test_leakage_report_shape(self):
        rng = np.random.default_rng(3)
        codes = rng.normal(size=(600, 12))
        factors = rng.integers(0, 3, size=600)
        feats = rng.normal(size=(120, 8))
        labels = np.arange(120) % 3
        report = ev.speaker_leakage_report(codes, factors, feats, labels)
        assert set(report.mig_by_bins) == {30, 50, 100}
        assert set(report.disentanglement) == {"rf", "lasso"}
        assert set(report.explicitness) == {"rf", "lasso"}
        doc = report.to_document()
        assert doc["classifier_kinds"] == ["rf", "lasso"]


class TestProsodyTrends:
    def test_constant_synth_flagged(self):
        audio = tone(150, seconds=0.5)

        def synth(_hed):
            return audio

        table = ev.prosody_trend_analysis(synth, _base_hed(),
                                          emotions=["Sad"])
        assert all(entry.correlation is None
                   for entry in table["Sad"].values())

    def test_injected_energy_trend_detected(self):
        base = _base_hed()
        col = base.column("utterance", "Angry")

        def synth(hed):
            value = float(hed.matrix[0, col])
            return (0.2 + 0.8 * value) * tone(150, seconds=0.5)

        table = ev.prosody_trend_analysis(
            synth, base, emotions=["Angry"],
            expected={"Angry": {"energy_mean": 1}})
        entry = table["Angry"]["energy_mean"]
        assert entry.correlation == pytest.approx(1.0)
        assert entry.matches_expectation is True

    def test_expected_trends_from_corpus_stats(self):
        quiet = {"duration": 1.0, "pitch_mean": 100.0, "pitch_std": 5.0,
                 "energy_mean": 0.1, "energy_std": 0.01}
        loud = dict(quiet, energy_mean=0.5)
        table = ev.expected_prosody_trends(
            {"Neutral": [quiet], "Angry": [loud]})
        assert table["Angry"]["energy_mean"] == 1


class TestWer:
    def test_identical(self):
        assert ev.word_error_rate("the cat sat", "the cat sat") == 0.0

    def test_known_distance(self):
        # one substitution + one deletion over 4 reference words
        assert ev.word_error_rate("a b c d", "a x c") == pytest.approx(0.5)

    def test_empty_hypothesis_is_all_deletions(self):
        assert ev.word_error_rate("a b", "") == 1.0

    def test_empty_reference_rejected(self):
        with pytest.raises(ev.EmptyInput):
            ev.word_error_rate("", "a")

    def test_from_files(self, tmp_path):
        (tmp_path / "u1.txt").write_text("hello there", encoding="utf-8")
        out = ev.wer_from_files({"u1": "hello world", "u2": "missing"},
                                tmp_path)
        assert out == {"u1": pytest.approx(0.5)}


class TestPairwiseReport:
    def test_aggregates(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=12000) * 0.1
        pairs = [(a, a), (a, a + 0.01 * rng.normal(size=a.shape[0]))]
        report = ev.pairwise_metric_report(pairs)
        assert report.mcd >= 0.0
        assert report.n_pairs == 2
        doc = report.to_document()
        assert set(doc) >= {"mcd", "pitch_distortion", "energy_distortion"}
