"""CTC forced alignment: frame-level timestamps for a known token sequence.

The aligner runs a Viterbi pass over the extended label sequence
[blank, y1, blank, y2, ..., yL, blank]. A state may be entered from itself,
from the previous state, or by skipping one state back, where the skip is
legal only into a non-blank state whose label differs from the state two
back. Paths start in state 0 or 1 and end in one of the last two states, so
every target token is emitted. A token's span is the frames spent in its
(non-blank) state; blank frames belong to no token.

Determinism: per-cell ties prefer staying in the same state, then advancing
one state, then skipping; the final-state tie prefers the trailing blank.
Scores accumulate in float64 over float32 inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InfeasibleAlignmentError, ValidationError
from .features import FeatureKind, FeatureMatrix, TokenVocab
from .records import DocumentRef
from .vad import SpeechSpan

WORD_DELIMITER = "|"


@dataclass(frozen=True)
class TargetSequence:
    """Token indices plus their word and segment grouping.

    word_index has one entry per token; segment_index has one entry per word.
    Both are non-decreasing, start at 0, and have no gaps.
    """

    tokens: tuple[int, ...]
    word_index: tuple[int, ...]
    segment_index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "word_index", tuple(self.word_index))
        object.__setattr__(self, "segment_index", tuple(self.segment_index))
        if not self.tokens:
            raise ValidationError("target sequence must be non-empty")
        if len(self.word_index) != len(self.tokens):
            raise ValidationError("word_index must have one entry per token")
        _check_grouping(self.word_index, "word_index")
        n_words = self.word_index[-1] + 1
        if len(self.segment_index) != n_words:
            raise ValidationError(f"segment_index must have one entry per word ({n_words})")
        _check_grouping(self.segment_index, "segment_index")

    @property
    def n_words(self) -> int:
        return self.word_index[-1] + 1

    @property
    def n_segments(self) -> int:
        return self.segment_index[-1] + 1


def _check_grouping(ids: Sequence[int], name: str) -> None:
    if ids[0] != 0:
        raise ValidationError(f"{name} must start at 0")
    for prev, cur in zip(ids, ids[1:]):
        if cur < prev or cur > prev + 1:
            raise ValidationError(f"{name} must be non-decreasing without gaps")


@dataclass(frozen=True)
class AlignmentResult:
    """Frame spans (inclusive ends) at token, word, and segment granularity."""

    token_spans: tuple[tuple[int, int], ...]
    word_spans: tuple[tuple[int, int], ...]
    segment_spans: tuple[tuple[int, int], ...]
    path_log_prob: float
    frame_seconds: float

    def validate(self) -> None:
        for name, spans in (("token", self.token_spans), ("word", self.word_spans), ("segment", self.segment_spans)):
            last_end = -1
            for s, e in spans:
                if s > e:
                    raise ValidationError(f"{name} span ({s}, {e}) is empty")
                if name == "token" and s <= last_end:
                    raise ValidationError(f"{name} spans overlap or are out of order")
                last_end = e


def encode_target(
    sentences: Sequence[str], vocab: TokenVocab, word_delimiter: str = WORD_DELIMITER
) -> TargetSequence:
    """Character-level encoding of segmented text.

    Words (and sentences) are joined by the delimiter token, which is attached
    to the preceding word. Each sentence becomes one segment.
    """
    delim_idx = vocab.index_of(word_delimiter)
    tokens: list[int] = []
    word_ids: list[int] = []
    segment_ids: list[int] = []
    word_id = -1
    for seg_id, sentence in enumerate(sentences):
        words = sentence.split()
        if not words:
            raise ValidationError(f"sentence {seg_id} has no words")
        for word in words:
            if word_id >= 0:  # delimiter between words, attached to the previous word
                tokens.append(delim_idx)
                word_ids.append(word_id)
            word_id += 1
            segment_ids.append(seg_id)
            for ch in word:
                idx = vocab.index_of(ch)
                if idx == vocab.blank_index:
                    raise ValidationError(f"character {ch!r} maps to the blank token")
                tokens.append(idx)
                word_ids.append(word_id)
    return TargetSequence(tokens=tuple(tokens), word_index=tuple(word_ids), segment_index=tuple(segment_ids))


def min_frames_required(tokens: Sequence[int]) -> int:
    duplicates = sum(1 for a, b in zip(tokens, tokens[1:]) if a == b)
    return len(tokens) + duplicates


def ctc_viterbi_align(logits: FeatureMatrix, vocab: TokenVocab, target: TargetSequence) -> AlignmentResult:
    """Best forced-alignment path for a target token sequence."""
    if logits.kind != FeatureKind.LOGITS:
        raise ValidationError(f"expected logits matrix, got {logits.kind.name}")
    tokens = target.tokens
    n_frames, n_vocab = logits.rows, logits.cols
    if n_vocab != len(vocab):
        raise ValidationError(f"logits have {n_vocab} columns but vocab has {len(vocab)} tokens")
    blank = vocab.blank_index
    for idx in tokens:
        if not 0 <= idx < n_vocab:
            raise ValidationError(f"token index {idx} out of range for vocab of {n_vocab}")
        if idx == blank:
            raise ValidationError("target tokens must not include the blank token")
    needed = min_frames_required(tokens)
    if n_frames < needed:
        raise InfeasibleAlignmentError(
            f"target needs at least {needed} frames, logits provide {n_frames}"
        )

    n_labels = len(tokens)
    n_states = 2 * n_labels + 1
    labels = [blank if s % 2 == 0 else tokens[s // 2] for s in range(n_states)]
    frame_logits = logits.data.astype(np.float64)

    neg_inf = -math.inf
    score = np.full(n_states, neg_inf)
    score[0] = frame_logits[0][labels[0]]
    score[1] = frame_logits[0][labels[1]]
    backptr = np.zeros((n_frames, n_states), dtype=np.int32)

    for t in range(1, n_frames):
        new_score = np.full(n_states, neg_inf)
        for s in range(n_states):
            # candidate predecessors in tie-break order: stay, advance 1, skip
            best = score[s]
            best_from = s
            if s >= 1 and score[s - 1] > best:
                best = score[s - 1]
                best_from = s - 1
            if s >= 2 and labels[s] != blank and labels[s] != labels[s - 2] and score[s - 2] > best:
                best = score[s - 2]
                best_from = s - 2
            if best > neg_inf:
                new_score[s] = best + frame_logits[t][labels[s]]
                backptr[t][s] = best_from
        score = new_score

    # final state: trailing blank preferred on ties
    end_state = n_states - 1
    if score[n_states - 2] > score[end_state]:
        end_state = n_states - 2
    if score[end_state] == neg_inf:
        raise InfeasibleAlignmentError("no feasible alignment path")

    states = [0] * n_frames
    s = end_state
    for t in range(n_frames - 1, -1, -1):
        states[t] = s
        s = backptr[t][s]

    token_spans: list[tuple[int, int]] = []
    for i in range(n_labels):
        state = 2 * i + 1
        frames = [t for t, st in enumerate(states) if st == state]
        token_spans.append((frames[0], frames[-1]))

    word_spans = _hull_spans(token_spans, target.word_index)
    segment_spans = _hull_spans(word_spans, target.segment_index)
    result = AlignmentResult(
        token_spans=tuple(token_spans),
        word_spans=tuple(word_spans),
        segment_spans=tuple(segment_spans),
        path_log_prob=float(score[end_state]),
        frame_seconds=logits.frame_seconds,
    )
    result.validate()
    return result


def _hull_spans(spans: Sequence[tuple[int, int]], group_ids: Sequence[int]) -> list[tuple[int, int]]:
    hulls: list[tuple[int, int]] = []
    for span, gid in zip(spans, group_ids):
        if gid == len(hulls):
            hulls.append(span)
        else:
            s, e = hulls[gid]
            hulls[gid] = (min(s, span[0]), max(e, span[1]))
    return hulls


def offset_alignment(a: AlignmentResult, chunk_start_frame: int) -> AlignmentResult:
    """Shift all frame indices by a chunk's starting frame."""
    if chunk_start_frame < 0:
        raise ValidationError("chunk_start_frame must be >= 0")

    def shift(spans):
        return tuple((s + chunk_start_frame, e + chunk_start_frame) for s, e in spans)

    return AlignmentResult(
        token_spans=shift(a.token_spans),
        word_spans=shift(a.word_spans),
        segment_spans=shift(a.segment_spans),
        path_log_prob=a.path_log_prob,
        frame_seconds=a.frame_seconds,
    )


def remap_alignment(a: AlignmentResult, frame_map: Sequence[int]) -> AlignmentResult:
    """Map chunk-local frame indices through an explicit frame lookup table.

    Used when several VAD chunks were concatenated before alignment: entry t
    of frame_map is the document frame behind concatenated frame t.
    """

    def remap(spans):
        return tuple((int(frame_map[s]), int(frame_map[e])) for s, e in spans)

    return AlignmentResult(
        token_spans=remap(a.token_spans),
        word_spans=remap(a.word_spans),
        segment_spans=remap(a.segment_spans),
        path_log_prob=a.path_log_prob,
        frame_seconds=a.frame_seconds,
    )


def segments_to_utterances(
    a: AlignmentResult, doc: DocumentRef, sentences: Sequence[str]
) -> list[tuple[SpeechSpan, str]]:
    """Pair each segment span with its sentence, in seconds.

    Frame spans are inclusive, so a segment covering frames [s, e] spans
    [s * fs, (e + 1) * fs] seconds; times are rounded to microseconds and
    clipped to the document duration.
    """
    if len(a.segment_spans) != len(sentences):
        raise ValidationError(
            f"segment count {len(a.segment_spans)} != sentence count {len(sentences)}"
        )
    fs = a.frame_seconds
    out = []
    for (s, e), text in zip(a.segment_spans, sentences):
        start_s = max(0.0, round(s * fs, 6))
        end_s = min(doc.audio_seconds, round((e + 1) * fs, 6))
        out.append((SpeechSpan(start_s=start_s, end_s=end_s), text))
    return out


def ctc_greedy_decode(
    logits: FeatureMatrix,
    vocab: TokenVocab,
    frame_range: Optional[tuple[int, int]] = None,
    word_delimiter: str = WORD_DELIMITER,
) -> str:
    """Best-path decode: per-frame argmax, collapse repeats, drop blanks.

    frame_range is an inclusive (start, end) frame pair; the delimiter token
    renders as a space. Used to produce the ASR hypothesis for the
    audio-transcript quality score.
    """
    data = logits.data
    if frame_range is not None:
        s, e = frame_range
        if not 0 <= s <= e < logits.rows:
            raise ValidationError(f"frame range ({s}, {e}) outside 0..{logits.rows - 1}")
        data = data[s : e + 1]
    best = np.argmax(data, axis=1)
    chars: list[str] = []
    prev = -1
    for idx in best:
        if idx != prev and idx != vocab.blank_index:
            token = vocab.tokens[idx]
            chars.append(" " if token == word_delimiter else token)
        prev = idx
    return "".join(chars).strip()
