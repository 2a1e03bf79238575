"""Writer and self-check validator for the BAF1 feature container.

This module is the adapter's half of the file-format contract with the
mining toolkit; it is implemented from the format specification alone and
deliberately shares no code with the consumer.

Layout: magic b"BAF1" (4 bytes), kind (1 byte: 0 logits, 1 embeddings,
2 vad_probs), rows (u32 LE), cols (u32 LE), frame_seconds (f32 LE), then
rows*cols f32 LE values row-major. Exactly 17 + 4*rows*cols bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"BAF1"
_HEADER = struct.Struct("<4sBIIf")

KIND_LOGITS = 0
KIND_EMBEDDINGS = 1
KIND_VAD_PROBS = 2

LOGPROB_TOLERANCE = 1e-3


class BafError(ValueError):
    """A matrix or file violates the BAF1 contract."""


def write_baf(path: str | Path, kind: int, data: np.ndarray, frame_seconds: float) -> None:
    data = np.ascontiguousarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise BafError(f"data must be 2-D, got shape {data.shape}")
    validate_matrix(kind, data, float(np.float32(frame_seconds)))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, kind, data.shape[0], data.shape[1], np.float32(frame_seconds)))
        fh.write(data.astype("<f4", copy=False).tobytes(order="C"))


def read_baf(path: str | Path) -> tuple[int, np.ndarray, float]:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise BafError(f"{path}: truncated header")
    magic, kind, rows, cols, frame_seconds = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise BafError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * rows * cols
    if len(blob) != expected:
        raise BafError(f"{path}: expected {expected} bytes, got {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(rows, cols).copy()
    validate_matrix(kind, data, frame_seconds)
    return kind, data, float(frame_seconds)


def validate_matrix(kind: int, data: np.ndarray, frame_seconds: float) -> None:
    rows, cols = data.shape
    if rows < 1 or cols < 1:
        raise BafError(f"matrix must be at least 1x1, got {rows}x{cols}")
    if not np.isfinite(data).all():
        raise BafError("matrix contains non-finite values")
    if kind == KIND_LOGITS:
        if frame_seconds <= 0:
            raise BafError("logits need frame_seconds > 0")
        x = data.astype(np.float64)
        m = x.max(axis=1, keepdims=True)
        lse = (m + np.log(np.exp(x - m).sum(axis=1, keepdims=True))).ravel()
        worst = float(np.abs(lse).max())
        if worst > LOGPROB_TOLERANCE:
            raise BafError(f"logits rows not normalized: max |logsumexp| = {worst:.6g}")
    elif kind == KIND_VAD_PROBS:
        if frame_seconds <= 0:
            raise BafError("vad_probs need frame_seconds > 0")
        if cols != 1:
            raise BafError(f"vad_probs must have one column, got {cols}")
        if float(data.min()) < 0.0 or float(data.max()) > 1.0:
            raise BafError("vad_probs outside [0, 1]")
    elif kind == KIND_EMBEDDINGS:
        if frame_seconds != 0.0:
            raise BafError("embeddings must carry frame_seconds = 0.0")
    else:
        raise BafError(f"unknown kind byte {kind}")


def write_vocab_json(path: str | Path, tokens: list[str], blank_index: int) -> None:
    if len(set(tokens)) != len(tokens):
        raise BafError("vocab tokens must be unique")
    if not 0 <= blank_index < len(tokens):
        raise BafError("blank_index out of range")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"tokens": tokens, "blank_index": blank_index}, fh, ensure_ascii=False)
        fh.write("\n")
