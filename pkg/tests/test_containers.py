import struct

import numpy as np
import pytest

from emotts import containers
from emotts.corpus import load_external_embedding, save_external_embedding, validate_embedding
from emotts.containers import CorruptPayload, SchemaVersionMismatch


class TestMatrixContainer:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        matrix = rng.normal(size=(50, 22)).astype(np.float32)
        path = tmp_path / "x.emat"
        containers.write_matrix(path, "utt_1", 62.5, matrix)
        loaded = containers.read_matrix(path)
        assert loaded.utterance_id == "utt_1"
        assert loaded.frame_rate == 62.5
        assert np.array_equal(loaded.matrix, matrix)

    def test_float64_input_is_stored_as_float32(self, tmp_path):
        matrix = np.array([[0.1, 0.2]], dtype=np.float64)
        path = tmp_path / "x.emat"
        containers.write_matrix(path, "u", 10.0, matrix)
        loaded = containers.read_matrix(path)
        assert loaded.matrix.dtype == np.float32
        assert np.array_equal(loaded.matrix, matrix.astype(np.float32))

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "x.emat"
        containers.write_matrix(path, "u", 10.0, np.ones((4, 4), np.float32))
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(CorruptPayload):
            containers.read_matrix(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "x.emat"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(CorruptPayload):
            containers.read_matrix(path)

    def test_version_mismatch_explicit(self, tmp_path):
        path = tmp_path / "x.emat"
        containers.write_matrix(path, "u", 10.0, np.ones((2, 2), np.float32))
        blob = bytearray(path.read_bytes())
        blob[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(blob))
        with pytest.raises(SchemaVersionMismatch):
            containers.read_matrix(path)

    def test_requires_2d(self, tmp_path):
        with pytest.raises(ValueError):
            containers.write_matrix(tmp_path / "x.emat", "u", 1.0,
                                    np.ones(5, np.float32))


class TestExternalEmbedding:
    def test_corpus_wrappers(self, tmp_path):
        matrix = np.random.default_rng(1).normal(size=(125, 16))
        path = tmp_path / "utt.emat"
        save_external_embedding(path, "utt", 62.5, matrix)
        emb = load_external_embedding(path)
        # 125 frames at 62.5 Hz ~ 2.0 s of audio
        validate_embedding(emb, audio_duration=2.0)
        with pytest.raises(Exception):
            validate_embedding(emb, audio_duration=5.0)
