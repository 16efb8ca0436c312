"""Binary matrix container used for feature caches and external embeddings.

Layout: 4-byte magic ``EMAT``, uint32 version, uint32 header length, a UTF-8
JSON header ``{"utterance_id", "frame_rate", "dim", "frames"}``, then
``frames * dim`` little-endian float32 values in row-major order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"EMAT"
FORMAT_VERSION = 1


class ContainerError(Exception):
    """Base error for container files."""


class CorruptPayload(ContainerError):
    """File is truncated or structurally invalid."""


class SchemaVersionMismatch(ContainerError):
    """File was written by an incompatible format version."""


@dataclass(frozen=True)
class MatrixFile:
    utterance_id: str
    frame_rate: float
    matrix: np.ndarray  # (frames, dim) float32


def write_matrix(path: str | Path, utterance_id: str, frame_rate: float,
                 matrix: np.ndarray) -> None:
    mat = np.ascontiguousarray(matrix, dtype=np.float32)
    if mat.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {mat.shape}")
    header = json.dumps({
        "utterance_id": utterance_id,
        "frame_rate": float(frame_rate),
        "dim": int(mat.shape[1]),
        "frames": int(mat.shape[0]),
    }).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        fh.write(header)
        fh.write(mat.tobytes(order="C"))


def read_matrix(path: str | Path) -> MatrixFile:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise CorruptPayload(f"{path}: not a matrix container")
    version, header_len = struct.unpack("<II", blob[4:12])
    if version != FORMAT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: version {version}, reader supports {FORMAT_VERSION}")
    if len(blob) < 12 + header_len:
        raise CorruptPayload(f"{path}: truncated header")
    try:
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
        frames, dim = int(header["frames"]), int(header["dim"])
    except (ValueError, KeyError) as exc:
        raise CorruptPayload(f"{path}: bad header") from exc
    payload = blob[12 + header_len:]
    expected = frames * dim * 4
    if len(payload) != expected:
        raise CorruptPayload(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    matrix = np.frombuffer(payload, dtype="<f4").reshape(frames, dim)
    return MatrixFile(utterance_id=str(header["utterance_id"]),
                      frame_rate=float(header["frame_rate"]),
                      matrix=matrix.copy())
