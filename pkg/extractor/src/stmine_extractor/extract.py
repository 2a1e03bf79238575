"""Extraction jobs: audio (and sentences) in, validated BAF1 files out.

Every output is written to a temporary file, re-read, and validated against
the format contract before it is moved into place, so a reported success
implies the consumer will accept the file. Nothing is written when audio
decoding fails.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import load_wav
from .baf import (
    KIND_EMBEDDINGS,
    KIND_LOGITS,
    KIND_VAD_PROBS,
    BafError,
    read_baf,
    write_baf,
    write_vocab_json,
)
from .models import CTC_BLANK_INDEX, CTC_TOKENS, ExtractorConfig, ModelBundle

ALL_KINDS = ("logits", "emb", "vad")

_KIND_BYTES = {"logits": KIND_LOGITS, "emb": KIND_EMBEDDINGS, "vad": KIND_VAD_PROBS}


@dataclass(frozen=True)
class ExtractorJob:
    audio_path: Path
    doc_id: str
    out_dir: Path
    kinds: tuple[str, ...] = ALL_KINDS
    texts: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "audio_path", Path(self.audio_path))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        unknown = set(self.kinds) - set(ALL_KINDS)
        if unknown:
            raise ValueError(f"unknown feature kinds: {sorted(unknown)}")
        if "emb" in self.kinds and not self.texts:
            raise ValueError("embedding extraction needs texts")


def _write_checked(path: Path, kind_name: str, data: np.ndarray, frame_seconds: float) -> Path:
    """Atomic write with a mandatory self-check re-read."""
    kind = _KIND_BYTES[kind_name]
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        write_baf(tmp, kind, data, frame_seconds)
        back_kind, back_data, back_fs = read_baf(tmp)
        if back_kind != kind or back_data.shape != data.shape:
            raise BafError(f"{path}: self-check mismatch after write")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def extract(job: ExtractorJob, cfg: ExtractorConfig | None = None, bundle: ModelBundle | None = None) -> list[Path]:
    """Run the requested backends for one document; returns written paths."""
    bundle = bundle or ModelBundle(cfg or ExtractorConfig())
    needs_audio = "logits" in job.kinds or "vad" in job.kinds
    waveform = load_wav(job.audio_path) if needs_audio else None

    job.out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "logits" in job.kinds:
        logits, frame_seconds = bundle.asr_logits(waveform)
        written.append(_write_checked(job.out_dir / f"{job.doc_id}.logits.baf", "logits", logits, frame_seconds))
        vocab_path = job.out_dir / "vocab.json"
        write_vocab_json(vocab_path, CTC_TOKENS, CTC_BLANK_INDEX)
        written.append(vocab_path)
    if "emb" in job.kinds:
        emb = bundle.embeddings(list(job.texts))
        written.append(_write_checked(job.out_dir / f"{job.doc_id}.emb.baf", "emb", emb, 0.0))
    if "vad" in job.kinds:
        probs, frame_seconds = bundle.vad_probs(waveform)
        written.append(_write_checked(job.out_dir / f"{job.doc_id}.vad.baf", "vad", probs, frame_seconds))
    return written


def extract_many(jobs: list[ExtractorJob], cfg: ExtractorConfig | None = None) -> dict[str, list[Path]]:
    """Batch extraction sharing one model bundle; fails fast per job."""
    bundle = ModelBundle(cfg or ExtractorConfig())
    return {job.doc_id: extract(job, bundle=bundle) for job in jobs}
