"""Voice-activity chunking over per-frame speech probabilities.

detect_speech runs a two-threshold hysteresis automaton: a span opens at the
first frame at or above on_threshold and closes once the probability stays
below off_threshold for at least min_silence_s. Short spans are dropped,
survivors are padded and merged, and anything longer than max_chunk_s is
split recursively at the quietest frame of its middle third.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .features import FeatureKind, FeatureMatrix

_EPS = 1e-9


@dataclass(frozen=True)
class SpeechSpan:
    start_s: float
    end_s: float

    def __post_init__(self):
        if not 0.0 <= self.start_s < self.end_s:
            raise ValidationError(f"invalid span [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class VadConfig:
    on_threshold: float = 0.5
    off_threshold: float = 0.35
    min_speech_s: float = 0.25
    min_silence_s: float = 0.10
    pad_s: float = 0.05
    max_chunk_s: float = 30.0

    def __post_init__(self):
        if not 0.0 < self.off_threshold <= self.on_threshold < 1.0:
            raise ValidationError(
                f"need 0 < off_threshold <= on_threshold < 1, got off={self.off_threshold} on={self.on_threshold}"
            )
        for name in ("min_speech_s", "min_silence_s", "pad_s"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.max_chunk_s <= self.min_speech_s:
            raise ValidationError("max_chunk_s must exceed min_speech_s")


def _frames(seconds: float, frame_seconds: float) -> int:
    return max(0, math.ceil(seconds / frame_seconds - _EPS))


def _raw_spans(probs: np.ndarray, on: float, off: float, min_silence_frames: int) -> list[tuple[int, int]]:
    spans = []
    in_speech = False
    start = 0
    silence_start = -1  # first frame of the current below-off run
    for t, p in enumerate(probs):
        if not in_speech:
            if p >= on:
                in_speech = True
                start = t
                silence_start = -1
        else:
            if p < off:
                if silence_start < 0:
                    silence_start = t
                if t - silence_start + 1 >= min_silence_frames:
                    spans.append((start, silence_start))
                    in_speech = False
                    silence_start = -1
            else:
                silence_start = -1
    if in_speech:
        end = silence_start if silence_start >= 0 else len(probs)
        if end > start:
            spans.append((start, end))
    return spans


def _split_long(span: tuple[int, int], probs: np.ndarray, max_frames: int) -> list[tuple[int, int]]:
    a, b = span
    length = b - a
    if length <= max_frames or length < 2:
        return [(a, b)]
    third = length // 3
    lo, hi = a + third, b - third
    if lo >= hi:  # middle third empty for tiny spans; fall back to midpoint
        mid = a + length // 2
    else:
        mid = lo + int(np.argmin(probs[lo:hi]))
    if mid <= a or mid >= b:
        mid = a + length // 2
    return _split_long((a, mid), probs, max_frames) + _split_long((mid, b), probs, max_frames)


def detect_speech(probs: FeatureMatrix, cfg: VadConfig) -> list[SpeechSpan]:
    """Segment a probability stream into speech spans (sorted, non-overlapping)."""
    if probs.kind != FeatureKind.VAD_PROBS:
        raise ValidationError(f"expected vad_probs matrix, got {probs.kind.name}")
    fs = probs.frame_seconds
    if fs <= 0:
        raise ValidationError("frame_seconds must be positive")
    values = probs.data[:, 0].astype(np.float64)
    total = len(values)

    min_silence_frames = max(1, _frames(cfg.min_silence_s, fs))
    min_speech_frames = _frames(cfg.min_speech_s, fs)
    pad_frames = int(round(cfg.pad_s / fs))
    max_frames = max(1, int(cfg.max_chunk_s / fs + _EPS))

    spans = _raw_spans(values, cfg.on_threshold, cfg.off_threshold, min_silence_frames)
    spans = [(a, b) for a, b in spans if b - a >= min_speech_frames]

    padded: list[tuple[int, int]] = []
    for a, b in spans:
        a, b = max(0, a - pad_frames), min(total, b + pad_frames)
        if padded and a <= padded[-1][1]:
            padded[-1] = (padded[-1][0], max(padded[-1][1], b))
        else:
            padded.append((a, b))

    final: list[tuple[int, int]] = []
    for span in padded:
        final.extend(_split_long(span, values, max_frames))

    return [SpeechSpan(start_s=a * fs, end_s=b * fs) for a, b in final]


def slice_logits(logits: FeatureMatrix, span: SpeechSpan) -> tuple[FeatureMatrix, int]:
    """Cut the frame rows covering a span; returns (slice, first frame index).

    Rows floor(start_s / frame_seconds) .. ceil(end_s / frame_seconds) are
    returned; the first index is reported so alignment timestamps can be
    re-based onto the document frame grid.
    """
    if logits.kind != FeatureKind.LOGITS:
        raise ValidationError(f"expected logits matrix, got {logits.kind.name}")
    fs = logits.frame_seconds
    limit = logits.rows * fs
    if span.start_s < 0 or span.end_s > limit + _EPS:
        raise ValidationError(f"span [{span.start_s}, {span.end_s}] outside [0, {limit}]")
    first = int(math.floor(span.start_s / fs))
    last = min(logits.rows, int(math.ceil(span.end_s / fs)))
    if first >= last:
        raise ValidationError(f"span [{span.start_s}, {span.end_s}] covers no frames")
    piece = FeatureMatrix(kind=FeatureKind.LOGITS, data=logits.data[first:last].copy(), frame_seconds=fs)
    return piece, first
