"""Data model for mined speech-translation corpora and JSONL manifest I/O.

A corpus is a collection of utterance records, each pairing an audio span of
a source document with a source/target text pair and optional quality scores
(sigma: cosine mining score, tau: normalized edit similarity). Manifests are
JSONL files, one record per line, UTF-8 with LF line endings.

Serialized key order (fixed):
    doc_id, audio_path, audio_seconds, sample_rate_hz, src_lang, tgt_lang,
    start_s, end_s, source_text, target_text, sigma?, tau?, provenance
sigma/tau are omitted when the record carries no scores.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import ValidationError

# Registered language codes. All corpus directions pair English with one of
# the Indic languages; mni text ships in Bengali script.
LANGUAGES = frozenset(
    [
        "asm", "ben", "guj", "hin", "kan", "mal", "mar", "npi",
        "ory", "pan", "snd", "tam", "tel", "urd", "eng", "mni",
    ]
)

# Writing-system tag per language (mni deliberately maps to "beng").
SCRIPT_TAGS = {
    "asm": "beng",
    "ben": "beng",
    "eng": "latn",
    "guj": "gujr",
    "hin": "deva",
    "kan": "knda",
    "mal": "mlym",
    "mar": "deva",
    "mni": "beng",
    "npi": "deva",
    "ory": "orya",
    "pan": "guru",
    "snd": "arab",
    "tam": "taml",
    "tel": "telu",
    "urd": "arab",
}

PROVENANCES = ("existing", "mined", "synthetic")

# Sample rate every document is normalized to before feature extraction.
NORMALIZED_SAMPLE_RATE = 16000

MANIFEST_KEYS = (
    "doc_id", "audio_path", "audio_seconds", "sample_rate_hz",
    "src_lang", "tgt_lang", "start_s", "end_s",
    "source_text", "target_text", "sigma", "tau", "provenance",
)


def parse_lang(code: str) -> str:
    """Validate a 3-letter language code against the registered set."""
    if not isinstance(code, str) or len(code) != 3 or not code.isascii() or not code.islower():
        raise ValidationError(f"lang code {code!r} is not 3 ASCII lowercase letters")
    if code not in LANGUAGES:
        raise ValidationError(f"unknown lang code {code!r}")
    return code


def script_tag(code: str) -> str:
    return SCRIPT_TAGS[parse_lang(code)]


@dataclass(frozen=True)
class Direction:
    """A translation direction; exactly one side is English."""

    source: str
    target: str

    def __post_init__(self):
        parse_lang(self.source)
        parse_lang(self.target)
        if self.source == self.target:
            raise ValidationError("direction source and target must differ")
        if (self.source == "eng") == (self.target == "eng"):
            raise ValidationError("exactly one of source/target must be eng")

    @property
    def indic(self) -> str:
        """The non-English side of the pair."""
        return self.target if self.source == "eng" else self.source

    @property
    def label(self) -> str:
        return "en-xx" if self.source == "eng" else "xx-en"


@dataclass(frozen=True)
class DocumentRef:
    """Reference to one normalized source document (mono 16 kHz audio)."""

    doc_id: str
    audio_path: str
    audio_seconds: float
    sample_rate_hz: int = NORMALIZED_SAMPLE_RATE

    def __post_init__(self):
        if not self.doc_id:
            raise ValidationError("doc_id must be non-empty")
        if not self.audio_seconds > 0:
            raise ValidationError(f"audio_seconds must be > 0, got {self.audio_seconds}")
        if self.sample_rate_hz != NORMALIZED_SAMPLE_RATE:
            raise ValidationError(
                f"sample_rate_hz must be {NORMALIZED_SAMPLE_RATE} after normalization, "
                f"got {self.sample_rate_hz}"
            )


@dataclass(frozen=True)
class QualityScores:
    """Quality-control scores attached to a mined record."""

    sigma: float  # cosine mining score, in [-1, 1]
    tau: float    # normalized edit similarity, in [0, 1]

    def __post_init__(self):
        if not -1.0 <= self.sigma <= 1.0:
            raise ValidationError(f"sigma must be in [-1, 1], got {self.sigma}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"tau must be in [0, 1], got {self.tau}")


@dataclass(frozen=True)
class UtteranceRecord:
    """One aligned (audio span, source text, target text) unit."""

    doc: DocumentRef
    direction: Direction
    start_s: float
    end_s: float
    source_text: str
    target_text: str
    scores: Optional[QualityScores] = None
    provenance: str = "mined"
    line_no: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.start_s:
            raise ValidationError(f"start_s must be >= 0, got {self.start_s}")
        if not self.start_s < self.end_s:
            raise ValidationError(
                f"end_s must be greater than start_s, got start_s={self.start_s} end_s={self.end_s}"
            )
        if self.end_s > self.doc.audio_seconds:
            raise ValidationError(
                f"end_s {self.end_s} exceeds document duration {self.doc.audio_seconds}"
            )
        if not self.source_text.strip():
            raise ValidationError("source_text must be non-empty after trimming")
        if not self.target_text.strip():
            raise ValidationError("target_text must be non-empty after trimming")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"provenance must be one of {PROVENANCES}, got {self.provenance!r}")
        if self.provenance == "mined" and self.scores is None:
            raise ValidationError("mined records must carry quality scores")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def span_key(self) -> tuple:
        return (self.doc.doc_id, self.start_s, self.end_s)


@dataclass(frozen=True)
class Manifest:
    """An ordered corpus split."""

    split: str
    records: tuple[UtteranceRecord, ...]

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValidationError(f"split must be train or test, got {self.split!r}")
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)


def manifest_duration(m: Manifest) -> float:
    """Total audio duration of a manifest in seconds."""
    return sum(r.end_s - r.start_s for r in m.records)


def record_to_obj(r: UtteranceRecord) -> dict:
    obj = {
        "doc_id": r.doc.doc_id,
        "audio_path": r.doc.audio_path,
        "audio_seconds": r.doc.audio_seconds,
        "sample_rate_hz": r.doc.sample_rate_hz,
        "src_lang": r.direction.source,
        "tgt_lang": r.direction.target,
        "start_s": r.start_s,
        "end_s": r.end_s,
        "source_text": r.source_text,
        "target_text": r.target_text,
    }
    if r.scores is not None:
        obj["sigma"] = r.scores.sigma
        obj["tau"] = r.scores.tau
    obj["provenance"] = r.provenance
    return obj


def record_from_obj(obj: dict, line_no: Optional[int] = None) -> UtteranceRecord:
    unknown = set(obj) - set(MANIFEST_KEYS)
    if unknown:
        raise ValidationError(f"unknown manifest keys: {sorted(unknown)}")
    missing = {k for k in MANIFEST_KEYS if k not in ("sigma", "tau")} - set(obj)
    if missing:
        raise ValidationError(f"missing manifest keys: {sorted(missing)}")
    scores = None
    if "sigma" in obj or "tau" in obj:
        if not ("sigma" in obj and "tau" in obj):
            raise ValidationError("sigma and tau must both be present or both absent")
        scores = QualityScores(sigma=obj["sigma"], tau=obj["tau"])
    return UtteranceRecord(
        doc=DocumentRef(
            doc_id=obj["doc_id"],
            audio_path=obj["audio_path"],
            audio_seconds=obj["audio_seconds"],
            sample_rate_hz=obj["sample_rate_hz"],
        ),
        direction=Direction(source=obj["src_lang"], target=obj["tgt_lang"]),
        start_s=obj["start_s"],
        end_s=obj["end_s"],
        source_text=obj["source_text"],
        target_text=obj["target_text"],
        scores=scores,
        provenance=obj["provenance"],
        line_no=line_no,
    )


def read_manifest(path: str | Path, split: str = "train") -> Manifest:
    """Read a JSONL manifest; whitespace-only lines are ignored.

    Parse and validation errors carry the 1-based line number.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}: line {line_no}: malformed JSON: {e}") from e
            try:
                records.append(record_from_obj(obj, line_no=line_no))
            except ValidationError as e:
                raise ValidationError(f"{path}: line {line_no}: {e}") from e
    return Manifest(split=split, records=tuple(records))


def write_manifest(m: Manifest, path: str | Path) -> None:
    """Write a manifest atomically (temp file + rename), one record per line."""
    path = Path(path)
    lines = [json.dumps(record_to_obj(r), ensure_ascii=False) for r in m.records]
    payload = "".join(line + "\n" for line in lines)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def assert_disjoint(test: Manifest, train: Manifest) -> None:
    """Check that two sibling splits share no (doc_id, start_s, end_s) span."""
    overlap = {r.span_key for r in test.records} & {r.span_key for r in train.records}
    if overlap:
        raise ValidationError(f"test/train share {len(overlap)} spans, e.g. {sorted(overlap)[0]}")


def records_grouped_by_direction(m: Manifest) -> dict[tuple[str, str], list[UtteranceRecord]]:
    groups: dict[tuple[str, str], list[UtteranceRecord]] = {}
    for r in m.records:
        groups.setdefault((r.direction.source, r.direction.target), []).append(r)
    return groups


def iter_records(paths: Iterable[str | Path]) -> Iterable[UtteranceRecord]:
    for p in paths:
        yield from read_manifest(p).records
