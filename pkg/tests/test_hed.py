import json

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from emotts import hed as hed_mod
from emotts.containers import CorruptPayload, SchemaVersionMismatch
from emotts.corpus import INTENSITY_EMOTIONS, alignment_from_document
from emotts.dsp import FrameFeatures
from emotts.hed import (EDEdit, HierarchicalED, apply_edit, deserialize_hed,
                        extract_hed, intensity_sweep, manual_hed,
                        serialize_hed, validate_hed)
from emotts.intensity import IntensityModel, IntensityModelConfig, IntensityNet

from conftest import saturating_intensity_model


def random_hed(rng, n_words=3, phones_per_word=3) -> HierarchicalED:
    """A block-consistent random distribution."""
    word_index = [w for w in range(n_words) for _ in range(phones_per_word)]
    n = len(word_index)
    matrix = np.zeros((n, 12), dtype=np.float32)
    matrix[:, 0:4] = rng.random((n, 4))
    word_vals = rng.random((n_words, 4))
    for i, w in enumerate(word_index):
        matrix[i, 4:8] = word_vals[w]
    matrix[:, 8:12] = rng.random(4)
    return HierarchicalED(
        utterance_id="rand", phone_symbols=tuple("P%d" % i for i in range(n)),
        word_index=tuple(word_index), matrix=matrix)


@pytest.fixture
def track(toy_alignment_doc):
    return alignment_from_document(toy_alignment_doc)


def _features_for(track):
    duration = track.phones[-1].end
    n_frames = int(duration * 62.5) + 2
    rng = np.random.default_rng(99)
    return FrameFeatures(matrix=rng.normal(size=(n_frames, 22)))


class TestExtractHed:
    def test_oracle_sad_replication(self, track):
        models = {lvl: saturating_intensity_model("Sad", input_dim=88)
                  for lvl in ("phoneme", "word", "utterance")}
        features = {lvl: _features_for(track)
                    for lvl in ("phoneme", "word", "utterance")}
        out = extract_hed(models, "fix_0001", track, features)
        expected_row = np.array([0, 0, 1, 0] * 3, dtype=np.float32)
        assert out.matrix.shape == (9, 12)
        assert np.array_equal(out.matrix,
                              np.tile(expected_row, (9, 1)))

    def test_row_count_matches_phones(self, track):
        models = {lvl: saturating_intensity_model("Angry", input_dim=88)
                  for lvl in ("phoneme", "word", "utterance")}
        features = {lvl: _features_for(track)
                    for lvl in ("phoneme", "word", "utterance")}
        out = extract_hed(models, "fix_0001", track, features)
        assert out.n_phones == len(track.phones)
        assert out.provenance == "extracted"

    def _random_model(self, seed):
        config = IntensityModelConfig(input_dim=88, hidden_dim=16,
                                      head_type="SER", alpha=2.0,
                                      grl_enabled=False)
        torch.manual_seed(seed)
        net = IntensityNet(config, 2)
        net.eval()
        return IntensityModel(net=net, config=config, alpha=2.0)

    def test_structural_invariants_with_random_weights(self, track):
        models = {lvl: self._random_model(i)
                  for i, lvl in enumerate(("phoneme", "word", "utterance"))}
        features = {lvl: _features_for(track)
                    for lvl in ("phoneme", "word", "utterance")}
        out = extract_hed(models, "fix_0001", track, features)
        validate_hed(out)
        utt = out.level_block("utterance")
        assert np.all(utt == utt[0])  # exact equality, not approximate
        # distinct words get distinct word blocks (random features differ)
        blocks = {tuple(out.matrix[i, 4:8]) for i in range(out.n_phones)}
        assert len(blocks) == 3

    def test_missing_model(self, track):
        models = {"phoneme": saturating_intensity_model("Sad", input_dim=88)}
        with pytest.raises(hed_mod.MissingModel):
            extract_hed(models, "x", track, {})

    def test_features_must_cover_utterance(self, track):
        models = {lvl: saturating_intensity_model("Sad", input_dim=88)
                  for lvl in ("phoneme", "word", "utterance")}
        short = FrameFeatures(matrix=np.zeros((5, 22)))  # 0.08 s of frames
        with pytest.raises(hed_mod.AlignmentMismatch):
            extract_hed(models, "x", track,
                        {lvl: short for lvl in ("phoneme", "word", "utterance")})


class TestApplyEdit:
    def test_set_utterance_column(self):
        h = random_hed(np.random.default_rng(0))
        out = apply_edit(h, EDEdit(level="utterance", emotion="Sad",
                                   mode="set", value=1.0))
        col = out.column("utterance", "Sad")
        assert col == 10
        assert np.all(out.matrix[:, col] == 1.0)
        mask = np.ones(12, dtype=bool)
        mask[col] = False
        assert np.array_equal(out.matrix[:, mask], h.matrix[:, mask])
        assert out.provenance == "edited"

    def test_scale_word_to_zero(self):
        h = random_hed(np.random.default_rng(1))
        out = apply_edit(h, EDEdit(level="word", emotion="Angry",
                                   mode="scale", value=0.0, target=2))
        col = out.column("word", "Angry")
        rows = np.asarray(h.word_index) == 2
        assert np.all(out.matrix[rows, col] == 0.0)
        assert np.array_equal(out.matrix[~rows], h.matrix[~rows])

    def test_set_then_scale_one_is_identity(self):
        h = random_hed(np.random.default_rng(2))
        a = apply_edit(h, EDEdit(level="phoneme", emotion="Happy",
                                 mode="set", value=0.4, target=3))
        b = apply_edit(a, EDEdit(level="phoneme", emotion="Happy",
                                 mode="scale", value=1.0, target=3))
        assert np.array_equal(a.matrix, b.matrix)

    def test_set_is_idempotent(self):
        h = random_hed(np.random.default_rng(3))
        e = EDEdit(level="word", emotion="Surprise", mode="set", value=0.7,
                   target=1)
        once = apply_edit(h, e)
        twice = apply_edit(once, e)
        assert np.array_equal(once.matrix, twice.matrix)

    def test_scale_clamps_to_one(self):
        h = random_hed(np.random.default_rng(4))
        out = apply_edit(h, EDEdit(level="utterance", emotion="Angry",
                                   mode="scale", value=100.0))
        assert out.matrix[:, out.column("utterance", "Angry")].max() <= 1.0
        validate_hed(out)

    def test_phoneme_span_target(self):
        h = random_hed(np.random.default_rng(5))
        out = apply_edit(h, EDEdit(level="phoneme", emotion="Sad",
                                   mode="set", value=0.9, target=(2, 5)))
        col = out.column("phoneme", "Sad")
        assert np.all(out.matrix[2:5, col] == np.float32(0.9))
        assert np.array_equal(out.matrix[0:2], h.matrix[0:2])
        assert np.array_equal(out.matrix[5:], h.matrix[5:])

    def test_index_out_of_range(self):
        h = random_hed(np.random.default_rng(6))
        with pytest.raises(hed_mod.IndexOutOfRange):
            apply_edit(h, EDEdit(level="word", emotion="Sad", mode="set",
                                 value=0.5, target=9))
        with pytest.raises(hed_mod.IndexOutOfRange):
            apply_edit(h, EDEdit(level="phoneme", emotion="Sad", mode="set",
                                 value=0.5, target=-1))

    def test_invalid_values(self):
        with pytest.raises(hed_mod.InvalidValue):
            EDEdit(level="utterance", emotion="Sad", mode="set", value=1.5)
        with pytest.raises(hed_mod.InvalidValue):
            EDEdit(level="utterance", emotion="Sad", mode="scale", value=-0.1)
        with pytest.raises(hed_mod.InvalidValue):
            EDEdit(level="utterance", emotion="Calm", mode="set", value=0.5)

    def test_edits_return_new_instances(self):
        h = random_hed(np.random.default_rng(7))
        before = h.matrix.copy()
        apply_edit(h, EDEdit(level="utterance", emotion="Sad", mode="set",
                             value=1.0))
        assert np.array_equal(h.matrix, before)


class TestSweep:
    def test_default_six_values(self):
        h = random_hed(np.random.default_rng(0))
        out = intensity_sweep(h, "utterance", "Sad")
        assert len(out) == 6
        col = h.column("utterance", "Sad")
        values = [o.matrix[0, col] for o in out]
        assert values == [np.float32(v) for v in (0, 0.2, 0.4, 0.6, 0.8, 1.0)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_single_value(self):
        h = random_hed(np.random.default_rng(1))
        assert len(intensity_sweep(h, "word", "Angry", [0.5], target=0)) == 1

    def test_non_target_entries_bit_identical(self):
        h = random_hed(np.random.default_rng(2))
        out = intensity_sweep(h, "utterance", "Happy")
        col = h.column("utterance", "Happy")
        mask = np.ones(12, dtype=bool)
        mask[col] = False
        for o in out:
            assert np.array_equal(o.matrix[:, mask], h.matrix[:, mask])

    def test_word_sweep_touches_only_member_rows(self):
        h = random_hed(np.random.default_rng(3))
        out = intensity_sweep(h, "word", "Sad", target=1)
        col = h.column("word", "Sad")
        member = np.asarray(h.word_index) == 1
        for o in out:
            diff = o.matrix != h.matrix
            assert not diff[~member].any()
            assert not diff[:, [c for c in range(12) if c != col]].any()


class TestSerialization:
    def test_round_trip_exact(self):
        h = random_hed(np.random.default_rng(0))
        again = deserialize_hed(serialize_hed(h))
        assert again.utterance_id == h.utterance_id
        assert again.phone_symbols == h.phone_symbols
        assert again.word_index == h.word_index
        assert np.array_equal(again.matrix, h.matrix)
        assert again.provenance == h.provenance

    def test_truncated_document(self):
        blob = serialize_hed(random_hed(np.random.default_rng(1)))
        with pytest.raises(CorruptPayload):
            deserialize_hed(blob[: len(blob) // 2])

    def test_version_mismatch_is_explicit(self):
        doc = json.loads(serialize_hed(random_hed(np.random.default_rng(2))))
        doc["version"] = 2
        with pytest.raises(SchemaVersionMismatch):
            deserialize_hed(json.dumps(doc))

    def test_schema_fields_present(self):
        doc = json.loads(serialize_hed(random_hed(np.random.default_rng(3))))
        assert doc["version"] == 1
        assert doc["emotions"] == list(INTENSITY_EMOTIONS)
        assert doc["levels"] == ["phoneme", "word", "utterance"]
        assert len(doc["matrix"][0]) == 12


edit_strategy = st.builds(
    EDEdit,
    level=st.sampled_from(["phoneme", "word", "utterance"]),
    emotion=st.sampled_from(list(INTENSITY_EMOTIONS)),
    mode=st.sampled_from(["set", "scale"]),
    value=st.floats(min_value=0.0, max_value=1.0),
    target=st.integers(min_value=0, max_value=2))


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1), st.lists(edit_strategy, max_size=6))
    def test_block_consistency_preserved(self, seed, edits):
        h = random_hed(np.random.default_rng(seed))
        for e in edits:
            h = apply_edit(h, e)
        validate_hed(h)

    def test_manual_hed_validates(self):
        h = manual_hed("m", ["A", "B"], [0, 0], fill=0.25)
        validate_hed(h)
        assert h.provenance == "manual"
