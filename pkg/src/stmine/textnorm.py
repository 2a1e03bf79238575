"""Transcript cleaning and sentence segmentation.

clean_text strips corpus noise (bracketed cues, HTML tags, music notes,
zero-width characters, control characters) and collapses whitespace while
leaving every other codepoint untouched. segment_sentences replaces each
terminal punctuation mark with a sentinel character that never occurs in
natural text, then splits on it.

The noise inventory is configuration, not code: a pattern file has one
pattern per line, '#' starts a comment, and a line beginning with "re:" is
a regular expression; anything else is removed as a literal string.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import ValidationError

# U+241E SYMBOL FOR RECORD SEPARATOR: visible in dumps, absent from text.
DEFAULT_SENTINEL = "␞"

DEFAULT_NOISE_PATTERNS = (
    "re:<[^<>]*>",          # HTML/SSML tags
    "re:\\[[^\\[\\]]*\\]",  # bracketed cues such as [Music], [Applause]
    "♪",               # eighth note
    "♫",               # beamed eighth notes
    "­",               # soft hyphen
    "​",               # zero width space
    "‌",               # zero width non-joiner
    "‍",               # zero width joiner
    "﻿",               # zero width no-break space / BOM
)

# Terminal punctuation by family. Per-language sets are configuration with
# these defaults; danda marks are shared across Indic-script text and the
# Perso-Arabic marks cover Urdu and Sindhi.
_BASE_TERMINALS = (".", "!", "?", "…")
_DANDA_TERMINALS = ("।", "॥")  # । ॥
_ARABIC_TERMINALS = ("۔", "؟")  # ۔ ؟

DEFAULT_TERMINALS: dict[str, tuple[str, ...]] = {
    "eng": _BASE_TERMINALS,
    "urd": _BASE_TERMINALS + _ARABIC_TERMINALS,
    "snd": _BASE_TERMINALS + _ARABIC_TERMINALS,
}
for _lang in ("asm", "ben", "guj", "hin", "kan", "mal", "mar", "mni", "npi", "ory", "pan", "tam", "tel"):
    DEFAULT_TERMINALS[_lang] = _BASE_TERMINALS + _DANDA_TERMINALS

ALL_TERMINALS = frozenset(_BASE_TERMINALS + _DANDA_TERMINALS + _ARABIC_TERMINALS)

_WS_RE = re.compile(r"\s+")
_LINEBREAK_RE = re.compile(r"[\r\n\t\v\f  ]")
_MAX_PATTERN_PASSES = 100


def terminal_marks(lang: str) -> tuple[str, ...]:
    """Terminal punctuation set for a language (base set when unregistered)."""
    return DEFAULT_TERMINALS.get(lang, _BASE_TERMINALS)


def parse_noise_patterns(lines: Iterable[str]) -> list[re.Pattern]:
    """Compile a pattern list: '#' comments, 're:' prefix marks a regex."""
    compiled = []
    for raw in lines:
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("re:"):
            compiled.append(re.compile(line[3:]))
        else:
            compiled.append(re.compile(re.escape(line)))
    return compiled


def load_noise_patterns(path: str | Path) -> list[re.Pattern]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_noise_patterns(fh)


_DEFAULT_COMPILED = parse_noise_patterns(DEFAULT_NOISE_PATTERNS)


def clean_text(raw: str, lang: Optional[str] = None, patterns: Optional[list[re.Pattern]] = None) -> str:
    """Normalize one transcript string.

    Line breaks become single spaces, the noise patterns are removed until a
    fixed point is reached (so nested cues like "[[Music]]" disappear), other
    control characters are dropped, and whitespace runs collapse to one
    space. All remaining codepoints are preserved as-is; lang is accepted for
    interface symmetry and reserved for per-language pattern sets.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ValidationError(f"input is not valid UTF-8: {e}") from e
    text = _LINEBREAK_RE.sub(" ", raw)
    pats = _DEFAULT_COMPILED if patterns is None else patterns
    for _ in range(_MAX_PATTERN_PASSES):
        before = text
        for pat in pats:
            text = pat.sub("", text)
        if text == before:
            break
    text = "".join(c for c in text if unicodedata.category(c) != "Cc")
    return _WS_RE.sub(" ", text).strip()


@dataclass(frozen=True)
class NormalizedDoc:
    """Sentence-segmented document; sentinel is the split marker used."""

    sentences: tuple[str, ...]
    sentinel: str = DEFAULT_SENTINEL

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if len(self.sentinel) != 1:
            raise ValidationError("sentinel must be a single character")
        for s in self.sentences:
            if not s:
                raise ValidationError("sentences must be non-empty")
            if s != s.strip():
                raise ValidationError(f"sentence has surrounding whitespace: {s!r}")
            if self.sentinel in s:
                raise ValidationError("sentence contains the sentinel character")


def segment_sentences(cleaned: str, lang: str, sentinel: str = DEFAULT_SENTINEL) -> NormalizedDoc:
    """Split cleaned text into sentences at terminal punctuation.

    Each terminal mark for the language is replaced by the sentinel; the text
    is split on the sentinel, pieces are trimmed, empty pieces are dropped,
    and terminal marks are not kept in the output sentences.
    """
    if sentinel in cleaned:
        raise ValidationError("input already contains the sentinel character")
    marks = terminal_marks(lang)
    marked = cleaned
    for mark in marks:
        marked = marked.replace(mark, sentinel)
    sentences = tuple(piece.strip() for piece in marked.split(sentinel) if piece.strip())
    return NormalizedDoc(sentences=sentences, sentinel=sentinel)
