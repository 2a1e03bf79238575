"""Bit-exact binary container for neural feature matrices ("BAF1" format).

One file holds one float32 matrix produced by an external model: ASR
log-posteriors (one row per frame), sentence embeddings (one row per
sentence), or per-frame voice-activity probabilities.

File layout, no padding, no trailing bytes:

    offset  size  field
    0       4     magic  b"BAF1"
    4       1     kind   (0 = logits, 1 = embeddings, 2 = vad_probs)
    5       4     rows   u32 little-endian
    9       4     cols   u32 little-endian
    13      4     frame_seconds  f32 little-endian (0.0 for embeddings)
    17      4*rows*cols   data, f32 little-endian, row-major

Total size is always 17 + 4*rows*cols bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"BAF1"
_HEADER = struct.Struct("<4sBIIf")
HEADER_BYTES = _HEADER.size  # 17

# Per-row log-probability tolerance: |logsumexp(row)| must not exceed this.
LOGPROB_TOLERANCE = 1e-3


class FeatureKind(IntEnum):
    LOGITS = 0
    EMBEDDINGS = 1
    VAD_PROBS = 2

    @property
    def suffix(self) -> str:
        return {0: "logits", 1: "emb", 2: "vad"}[int(self)]


def feature_filename(doc_id: str, kind: FeatureKind) -> str:
    return f"{doc_id}.{kind.suffix}.baf"


def _logsumexp_rows(data: np.ndarray) -> np.ndarray:
    m = data.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(data - m).sum(axis=1, keepdims=True))).ravel()


@dataclass(frozen=True)
class FeatureMatrix:
    """A validated feature matrix.

    frame_seconds is coerced to float32 precision at construction so that
    in-memory arithmetic matches what a file round-trip would produce.
    """

    kind: FeatureKind
    data: np.ndarray  # float32, shape (rows, cols), row-major
    frame_seconds: float = 0.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError(f"data must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        object.__setattr__(self, "frame_seconds", float(np.float32(self.frame_seconds)))
        self.validate()

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValidationError(f"matrix must have rows >= 1 and cols >= 1, got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValidationError("matrix contains non-finite values")
        if self.kind == FeatureKind.LOGITS:
            if self.frame_seconds <= 0.0:
                raise ValidationError("logits require frame_seconds > 0")
            lse = _logsumexp_rows(self.data.astype(np.float64))
            worst = float(np.abs(lse).max())
            if worst > LOGPROB_TOLERANCE:
                raise ValidationError(
                    f"logits rows must be normalized log-probabilities: "
                    f"max |logsumexp| = {worst:.6g} exceeds {LOGPROB_TOLERANCE}"
                )
        elif self.kind == FeatureKind.VAD_PROBS:
            if self.frame_seconds <= 0.0:
                raise ValidationError("vad_probs require frame_seconds > 0")
            if self.cols != 1:
                raise ValidationError(f"vad_probs must have cols = 1, got {self.cols}")
            if float(self.data.min()) < 0.0 or float(self.data.max()) > 1.0:
                raise ValidationError("vad_probs values must lie in [0, 1]")
        else:  # embeddings
            if self.frame_seconds != 0.0:
                raise ValidationError("embeddings require frame_seconds = 0.0")


def write_features(m: FeatureMatrix, path: str | Path) -> None:
    """Serialize a matrix; the file is exactly 17 + 4*rows*cols bytes."""
    m.validate()
    header = _HEADER.pack(MAGIC, int(m.kind), m.rows, m.cols, np.float32(m.frame_seconds))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(m.data.astype("<f4", copy=False).tobytes(order="C"))


def read_features(path: str | Path) -> FeatureMatrix:
    """Exact inverse of write_features; validates everything it reads."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < HEADER_BYTES:
        raise FormatError(f"{path}: truncated header: expected >= {HEADER_BYTES} bytes, got {len(blob)}")
    magic, kind_byte, rows, cols, frame_seconds = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if kind_byte not in (0, 1, 2):
        raise FormatError(f"{path}: unknown feature kind byte {kind_byte}")
    expected = HEADER_BYTES + 4 * rows * cols
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {rows}x{cols} matrix, got {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4", offset=HEADER_BYTES).reshape(rows, cols)
    return FeatureMatrix(kind=FeatureKind(kind_byte), data=data.copy(), frame_seconds=frame_seconds)


@dataclass(frozen=True)
class TokenVocab:
    """CTC token inventory; blank_index marks the blank symbol."""

    tokens: tuple[str, ...]
    blank_index: int

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValidationError("vocab must be non-empty")
        if len(set(self.tokens)) != len(self.tokens):
            dupes = sorted({t for t in self.tokens if self.tokens.count(t) > 1})
            raise ValidationError(f"vocab tokens must be unique, duplicates: {dupes}")
        if not 0 <= self.blank_index < len(self.tokens):
            raise ValidationError(
                f"blank_index {self.blank_index} out of range for {len(self.tokens)} tokens"
            )
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def index_of(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise ValidationError(f"token {token!r} not in vocab") from None


def read_vocab(path: str | Path) -> TokenVocab:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or "tokens" not in obj or "blank_index" not in obj:
        raise FormatError(f"{path}: vocab JSON must have fields 'tokens' and 'blank_index'")
    return TokenVocab(tokens=tuple(obj["tokens"]), blank_index=int(obj["blank_index"]))


def write_vocab(vocab: TokenVocab, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"tokens": list(vocab.tokens), "blank_index": vocab.blank_index}, fh, ensure_ascii=False)
        fh.write("\n")
