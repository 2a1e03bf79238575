"""chrF++ scoring (character 6-gram + word 2-gram F-score, beta = 2).

Matches the metric signature nrefs:1 | case:mixed | eff:yes | nc:6 | nw:2 |
space:no: no lowercasing, whitespace removed before character n-grams, one
reference per hypothesis, and effective-order averaging that skips orders
where both sides have zero n-grams. The corpus score aggregates n-gram
counts over all segments before computing per-order F-scores; it is not the
mean of segment scores.

Word tokenization approximates the mteval convention by splitting on
whitespace and detaching one leading or trailing punctuation character per
word; the punctuation set covers ASCII plus the Indic and Perso-Arabic
terminal marks.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass

from .errors import ValidationError

_PUNCTUATION = frozenset(string.punctuation) | {"।", "॥", "۔", "؟", "…"}
_TERMINAL_MARKS = frozenset({".", "!", "?", "…", "।", "॥", "۔", "؟"})
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class ChrfConfig:
    char_order: int = 6
    word_order: int = 2
    beta: float = 2.0
    effective_order: bool = True
    lowercase: bool = False           # case:mixed
    remove_whitespace: bool = True    # space:no

    def __post_init__(self):
        if self.char_order < 0 or self.word_order < 0 or self.char_order + self.word_order < 1:
            raise ValidationError("need at least one n-gram order")
        if self.beta <= 0:
            raise ValidationError("beta must be positive")

    @property
    def n_orders(self) -> int:
        return self.char_order + self.word_order


@dataclass(frozen=True)
class ChrfReport:
    corpus_score: float
    per_segment: tuple[float, ...]


def _detach_punctuation(word: str) -> list[str]:
    if len(word) == 1:
        return [word]
    if word[-1] in _PUNCTUATION:
        return [word[:-1], word[-1]]
    if word[0] in _PUNCTUATION:
        return [word[0], word[1:]]
    return [word]


def _word_tokens(text: str) -> list[str]:
    tokens: list[str] = []
    for word in text.split():
        tokens.extend(_detach_punctuation(word))
    return tokens


def _ngram_counts(items, max_order: int) -> list[Counter]:
    counts = [Counter() for _ in range(max_order)]
    for n in range(1, max_order + 1):
        grams = counts[n - 1]
        for i in range(len(items) - n + 1):
            grams[tuple(items[i : i + n])] += 1
    return counts


def _segment_statistics(hypothesis: str, reference: str, cfg: ChrfConfig) -> list[tuple[int, int, int]]:
    """(hyp_total, ref_total, matches) per order: chars 1..nc then words 1..nw."""
    if cfg.lowercase:
        hypothesis, reference = hypothesis.lower(), reference.lower()
    if cfg.remove_whitespace:
        hyp_chars = list(_WS_RE.sub("", hypothesis))
        ref_chars = list(_WS_RE.sub("", reference))
    else:
        hyp_chars, ref_chars = list(hypothesis), list(reference)
    stats: list[tuple[int, int, int]] = []
    for hyp_items, ref_items, max_order in (
        (hyp_chars, ref_chars, cfg.char_order),
        (_word_tokens(hypothesis), _word_tokens(reference), cfg.word_order),
    ):
        hyp_counts = _ngram_counts(hyp_items, max_order)
        ref_counts = _ngram_counts(ref_items, max_order)
        for n in range(max_order):
            matches = sum((hyp_counts[n] & ref_counts[n]).values())
            stats.append((sum(hyp_counts[n].values()), sum(ref_counts[n].values()), matches))
    return stats


def _score_from_statistics(stats: list[tuple[int, int, int]], cfg: ChrfConfig) -> float:
    beta_sq = cfg.beta**2
    f_sum = 0.0
    effective = 0
    for hyp_total, ref_total, matches in stats:
        if cfg.effective_order and hyp_total + ref_total == 0:
            continue
        effective += 1
        precision = matches / hyp_total if hyp_total > 0 else 0.0
        recall = matches / ref_total if ref_total > 0 else 0.0
        denom = beta_sq * precision + recall
        if denom > 0:
            f_sum += (1 + beta_sq) * precision * recall / denom
    if not cfg.effective_order:
        effective = len(stats)
    if effective == 0:
        return 0.0
    return 100.0 * f_sum / effective


def chrf_pp(hypotheses: list[str], references: list[str], cfg: ChrfConfig = ChrfConfig()) -> ChrfReport:
    """Corpus and per-segment chrF++ over paired hypothesis/reference lines."""
    if len(hypotheses) != len(references):
        raise ValidationError(f"length mismatch: {len(hypotheses)} hypotheses vs {len(references)} references")
    if not references:
        raise ValidationError("empty reference set")
    corpus = [(0, 0, 0)] * cfg.n_orders
    per_segment: list[float] = []
    for hyp, ref in zip(hypotheses, references):
        stats = _segment_statistics(hyp, ref, cfg)
        corpus = [(a + x, b + y, c + z) for (a, b, c), (x, y, z) in zip(corpus, stats)]
        per_segment.append(_score_from_statistics(stats, cfg))
    return ChrfReport(corpus_score=_score_from_statistics(corpus, cfg), per_segment=tuple(per_segment))


def tokenize_indic(text: str, lang: str = "hin") -> list[str]:
    """Whitespace tokenization with terminal marks detached as own tokens.

    Terminal punctuation (including danda, double danda, and the Urdu full
    stop) is peeled off the end of each token; lang is accepted for interface
    symmetry with language-specific tokenizers.
    """
    tokens: list[str] = []
    for word in text.split():
        tail: list[str] = []
        while len(word) > 1 and word[-1] in _TERMINAL_MARKS:
            tail.append(word[-1])
            word = word[:-1]
        tokens.append(word)
        tokens.extend(reversed(tail))
    return tokens
