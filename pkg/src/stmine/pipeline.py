"""Stage functions driving the mining pipeline over a workspace directory.

Workspace layout:

    workspace/
      docs.jsonl                  document index (one JSON object per line)
      raw/...                     transcript/translation text files
      features/<doc_id>.vad.baf   VAD probabilities
      features/<doc_id>.logits.baf  ASR log-posteriors
      features/<doc_id>.src.emb.baf / <doc_id>.tgt.emb.baf  sentence embeddings
      features/vocab.json         CTC vocabulary
      out/...                     stage outputs (written atomically)
      logs/<stage>.jsonl          machine-readable progress log

A document index line has keys: doc_id, audio_path, audio_seconds,
sample_rate_hz, src_lang, tgt_lang, src_text_path, tgt_text_path (text
paths relative to the workspace). Stage outputs are pure functions of their
inputs: re-running a stage on identical inputs produces byte-identical
files. Per-document failures are isolated unless strict mode is on.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import bitext, quality
from .ctc import ctc_greedy_decode, ctc_viterbi_align, encode_target, remap_alignment, segments_to_utterances
from .datasets import FilterPolicy, SampleSpec, filter_manifest, sample_test_set, stats_report
from .errors import ConfigError, MissingInputError, PipelineError, ValidationError
from .features import FeatureKind, FeatureMatrix, read_features, read_vocab
from .llm import LlmClient, ServiceConfig
from .records import (
    Direction,
    DocumentRef,
    Manifest,
    QualityScores,
    UtteranceRecord,
    read_manifest,
    write_manifest,
)
from .textnorm import clean_text, load_noise_patterns, segment_sentences
from .vad import SpeechSpan, VadConfig, detect_speech, slice_logits

STAGES = ("normalize", "chunk", "align", "score", "mine", "filter", "sample", "stats")

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_VALIDATION = 3
EXIT_CONFIG = 4


@dataclass
class PipelineConfig:
    workspace: Path
    vad: VadConfig = field(default_factory=VadConfig)
    policy: FilterPolicy = field(default_factory=FilterPolicy)
    sample: SampleSpec = field(default_factory=SampleSpec)
    llm: ServiceConfig = field(default_factory=ServiceConfig)
    mining_mode: str = "greedy"  # "greedy" | "dp"
    skip_penalty: float = bitext.DEFAULT_SKIP_PENALTY
    jobs: int = 0  # 0 = logical cores
    strict: bool = False

    def __post_init__(self):
        self.workspace = Path(self.workspace)
        if self.mining_mode not in ("greedy", "dp"):
            raise ConfigError(f"mining mode must be greedy or dp, got {self.mining_mode!r}")
        if self.jobs < 0:
            raise ConfigError("jobs must be >= 0")

    def validate_paths(self) -> None:
        if not self.workspace.is_dir():
            raise ConfigError(f"workspace directory does not exist: {self.workspace}")
        if not self.docs_path.is_file():
            raise ConfigError(f"document index does not exist: {self.docs_path}")

    @property
    def docs_path(self) -> Path:
        return self.workspace / "docs.jsonl"

    @property
    def features_dir(self) -> Path:
        return self.workspace / "features"

    @property
    def out_dir(self) -> Path:
        return self.workspace / "out"

    @property
    def logs_dir(self) -> Path:
        return self.workspace / "logs"

    def worker_count(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


def load_config(path: str | Path, workspace: Optional[Path] = None) -> PipelineConfig:
    """Read a TOML config file; CLI flags are merged on top by the caller."""
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - version dependent
        import tomli as tomllib
    with open(path, "rb") as fh:
        obj = tomllib.load(fh)
    ws = workspace or Path(obj.get("paths", {}).get("workspace", "."))
    llm_obj = obj.get("llm", {})
    return PipelineConfig(
        workspace=ws,
        vad=VadConfig(**obj.get("vad", {})),
        policy=FilterPolicy.from_obj(
            {
                "sigma_min": obj.get("filter", {}).get("sigma_min", 0.6),
                "tau_min": obj.get("filter", {}).get("tau_min", 0.8),
                "per_language_overrides": obj.get("filter", {}).get("overrides", {}),
            }
        ),
        sample=SampleSpec(**obj.get("sample", {})),
        llm=ServiceConfig.from_env(**llm_obj) if llm_obj else ServiceConfig.from_env(),
        mining_mode=obj.get("mining", {}).get("mode", "greedy"),
        skip_penalty=obj.get("mining", {}).get("skip_penalty", bitext.DEFAULT_SKIP_PENALTY),
    )


@dataclass(frozen=True)
class DocEntry:
    doc: DocumentRef
    direction: Direction
    src_text_path: str
    tgt_text_path: str


def read_doc_index(cfg: PipelineConfig) -> list[DocEntry]:
    if not cfg.docs_path.is_file():
        raise MissingInputError(str(cfg.docs_path))
    entries = []
    seen = set()
    with open(cfg.docs_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                entry = DocEntry(
                    doc=DocumentRef(
                        doc_id=obj["doc_id"],
                        audio_path=obj["audio_path"],
                        audio_seconds=obj["audio_seconds"],
                        sample_rate_hz=obj.get("sample_rate_hz", 16000),
                    ),
                    direction=Direction(source=obj["src_lang"], target=obj["tgt_lang"]),
                    src_text_path=obj["src_text_path"],
                    tgt_text_path=obj["tgt_text_path"],
                )
            except (KeyError, json.JSONDecodeError) as e:
                raise ValidationError(f"{cfg.docs_path}: line {line_no}: {e}") from e
            if entry.doc.doc_id in seen:
                raise ValidationError(f"{cfg.docs_path}: line {line_no}: duplicate doc_id {entry.doc.doc_id!r}")
            seen.add(entry.doc.doc_id)
            entries.append(entry)
    return sorted(entries, key=lambda e: e.doc.doc_id)


def _write_atomic(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, obj) -> None:
    _write_atomic(path, json.dumps(obj, ensure_ascii=False, indent=1) + "\n")


def _read_json(path: Path):
    if not path.is_file():
        raise MissingInputError(str(path))
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingInputError(str(path))
    return path


@dataclass
class StageSummary:
    stage: str
    ok: int = 0
    failed: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    def as_line(self) -> str:
        return f"stage={self.stage} ok={self.ok} failed={self.failed}"


class _StageLog:
    def __init__(self, cfg: PipelineConfig, stage: str):
        cfg.logs_dir.mkdir(parents=True, exist_ok=True)
        self.path = cfg.logs_dir / f"{stage}.jsonl"
        self.stage = stage
        self._fh = open(self.path, "a", encoding="utf-8")

    def emit(self, doc_id: str, status: str, duration_ms: float, error: str = "") -> None:
        obj = {"stage": self.stage, "doc_id": doc_id, "status": status, "duration_ms": round(duration_ms, 3)}
        if error:
            obj["error"] = error
        self._fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _run_per_doc(cfg: PipelineConfig, stage: str, worker: Callable[[DocEntry], None]) -> StageSummary:
    """Run a per-document worker with failure isolation and progress logging."""
    entries = read_doc_index(cfg)
    summary = StageSummary(stage=stage)
    log = _StageLog(cfg, stage)

    def timed(entry: DocEntry):
        started = time.monotonic()
        try:
            worker(entry)
            return entry.doc.doc_id, None, (time.monotonic() - started) * 1000
        except PipelineError as e:
            return entry.doc.doc_id, e, (time.monotonic() - started) * 1000

    try:
        workers = min(cfg.worker_count(), max(1, len(entries)))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(timed, entries))
        else:
            results = [timed(e) for e in entries]
        for doc_id, error, duration_ms in results:  # already sorted by doc_id
            if error is None:
                summary.ok += 1
                log.emit(doc_id, "ok", duration_ms)
            else:
                summary.failed += 1
                summary.failures.append((doc_id, str(error)))
                log.emit(doc_id, "failed", duration_ms, error=str(error))
                if cfg.strict:
                    raise error
    finally:
        log.close()
    return summary


# --- stage: normalize ---------------------------------------------------

def _normalized_path(cfg: PipelineConfig, doc_id: str) -> Path:
    return cfg.out_dir / "normalized" / f"{doc_id}.json"


def stage_normalize(cfg: PipelineConfig) -> StageSummary:
    client = LlmClient(cfg.llm)
    patterns_file = cfg.workspace / "noise_patterns.txt"
    patterns = load_noise_patterns(patterns_file) if patterns_file.is_file() else None

    def worker(entry: DocEntry) -> None:
        sides = {}
        flags = {}
        for side, lang, rel in (
            ("src", entry.direction.source, entry.src_text_path),
            ("tgt", entry.direction.target, entry.tgt_text_path),
        ):
            raw_path = _require(cfg.workspace / rel)
            raw = raw_path.read_text(encoding="utf-8")
            cleaned = clean_text(raw, patterns=patterns)
            response = client.punctuate(cleaned, lang)
            doc = segment_sentences(response.parsed_text, lang)
            if not doc.sentences:
                raise ValidationError(f"{entry.doc.doc_id}: {side} text has no sentences")
            sides[side] = list(doc.sentences)
            flags[side] = response.valid
        _write_json(
            _normalized_path(cfg, entry.doc.doc_id),
            {
                "doc_id": entry.doc.doc_id,
                "src_sentences": sides["src"],
                "tgt_sentences": sides["tgt"],
                "punct_valid": {"src": flags["src"], "tgt": flags["tgt"]},
            },
        )

    return _run_per_doc(cfg, "normalize", worker)


# --- stage: chunk ---------------------------------------------------------

def _chunks_path(cfg: PipelineConfig, doc_id: str) -> Path:
    return cfg.out_dir / "chunks" / f"{doc_id}.json"


def stage_chunk(cfg: PipelineConfig) -> StageSummary:
    def worker(entry: DocEntry) -> None:
        vad_matrix = read_features(_require(cfg.features_dir / f"{entry.doc.doc_id}.vad.baf"))
        spans = detect_speech(vad_matrix, cfg.vad)
        # Spans are stored at full precision; they index frame grids downstream.
        _write_json(
            _chunks_path(cfg, entry.doc.doc_id),
            {
                "doc_id": entry.doc.doc_id,
                "frame_seconds": vad_matrix.frame_seconds,
                "spans": [[s.start_s, s.end_s] for s in spans],
            },
        )

    return _run_per_doc(cfg, "chunk", worker)


# --- stage: align ---------------------------------------------------------

def _alignment_path(cfg: PipelineConfig, doc_id: str) -> Path:
    return cfg.out_dir / "alignments" / f"{doc_id}.json"


def stage_align(cfg: PipelineConfig) -> StageSummary:
    vocab = read_vocab(_require(cfg.features_dir / "vocab.json"))

    def worker(entry: DocEntry) -> None:
        doc_id = entry.doc.doc_id
        normalized = _read_json(_normalized_path(cfg, doc_id))
        chunks = _read_json(_chunks_path(cfg, doc_id))
        logits = read_features(_require(cfg.features_dir / f"{doc_id}.logits.baf"))
        sentences = normalized["src_sentences"]
        spans = [SpeechSpan(start_s=s, end_s=e) for s, e in chunks["spans"]]
        if not spans:
            raise ValidationError(f"{doc_id}: no speech detected")

        # Concatenate chunk slices (dropping inter-chunk silence), align once,
        # then map frames back onto the document grid.
        pieces = []
        frame_map: list[int] = []
        for span in spans:
            piece, first = slice_logits(logits, span)
            pieces.append(piece.data)
            frame_map.extend(range(first, first + piece.rows))
        merged = FeatureMatrix(kind=FeatureKind.LOGITS, data=np.vstack(pieces), frame_seconds=logits.frame_seconds)
        target = encode_target(sentences, vocab)
        aligned = remap_alignment(ctc_viterbi_align(merged, vocab, target), frame_map)
        timed = segments_to_utterances(aligned, entry.doc, sentences)
        _write_json(
            _alignment_path(cfg, doc_id),
            {
                "doc_id": doc_id,
                "frame_seconds": aligned.frame_seconds,
                "path_log_prob": aligned.path_log_prob,
                "segment_spans": [[s, e] for s, e in aligned.segment_spans],
                "segment_times": [[span.start_s, span.end_s] for span, _ in timed],
            },
        )

    return _run_per_doc(cfg, "align", worker)


# --- stage: score ---------------------------------------------------------

def _asr_path(cfg: PipelineConfig, doc_id: str) -> Path:
    return cfg.out_dir / "asr" / f"{doc_id}.json"


def stage_score(cfg: PipelineConfig) -> StageSummary:
    vocab = read_vocab(_require(cfg.features_dir / "vocab.json"))

    def worker(entry: DocEntry) -> None:
        doc_id = entry.doc.doc_id
        normalized = _read_json(_normalized_path(cfg, doc_id))
        alignment = _read_json(_alignment_path(cfg, doc_id))
        logits = read_features(_require(cfg.features_dir / f"{doc_id}.logits.baf"))
        sentences = normalized["src_sentences"]
        hypotheses = []
        taus = []
        for (s, e), sentence in zip(alignment["segment_spans"], sentences):
            hyp = ctc_greedy_decode(logits, vocab, frame_range=(s, e))
            hypotheses.append(hyp)
            taus.append(quality.alignment_score_tau(sentence, hyp))
        _write_json(
            _asr_path(cfg, doc_id),
            {"doc_id": doc_id, "hypotheses": hypotheses, "tau": taus},
        )

    return _run_per_doc(cfg, "score", worker)


# --- stage: mine ----------------------------------------------------------

def _mined_path(cfg: PipelineConfig) -> Path:
    return cfg.out_dir / "mined.jsonl"


def _doc_records(cfg: PipelineConfig, entry: DocEntry) -> list[UtteranceRecord]:
    doc_id = entry.doc.doc_id
    normalized = _read_json(_normalized_path(cfg, doc_id))
    alignment = _read_json(_alignment_path(cfg, doc_id))
    asr = _read_json(_asr_path(cfg, doc_id))
    src_sents = normalized["src_sentences"]
    tgt_sents = normalized["tgt_sentences"]
    src_emb = read_features(_require(cfg.features_dir / f"{doc_id}.src.emb.baf"))
    tgt_emb = read_features(_require(cfg.features_dir / f"{doc_id}.tgt.emb.baf"))
    if src_emb.rows != len(src_sents):
        raise ValidationError(f"{doc_id}: src embeddings have {src_emb.rows} rows for {len(src_sents)} sentences")
    if tgt_emb.rows != len(tgt_sents):
        raise ValidationError(f"{doc_id}: tgt embeddings have {tgt_emb.rows} rows for {len(tgt_sents)} sentences")
    times = [SpeechSpan(start_s=s, end_s=e) for s, e in alignment["segment_times"]]
    hyps = asr["hypotheses"]

    units: list[tuple[SpeechSpan, str, str, float, str]] = []  # span, src, tgt, sigma, hyp
    if cfg.mining_mode == "greedy":
        for pair in quality.mine_pairs(src_emb, tgt_emb):
            i, j = pair.source_idx, pair.target_idx
            units.append((times[i], src_sents[i], tgt_sents[j], pair.sigma, hyps[i]))
    else:
        ops = bitext.align_documents(src_emb, tgt_emb, skip_penalty=cfg.skip_penalty)
        for op in ops:
            if op.kind in (bitext.OP_SKIP_SRC, bitext.OP_SKIP_TGT):
                continue
            a, b = op.src_span
            span = SpeechSpan(start_s=times[a].start_s, end_s=times[b - 1].end_s)
            src_text = " ".join(src_sents[a:b])
            tgt_text = " ".join(tgt_sents[op.tgt_span[0] : op.tgt_span[1]])
            hyp = " ".join(hyps[a:b])
            units.append((span, src_text, tgt_text, op.score, hyp))

    records = []
    for span, src_text, tgt_text, sigma, hyp in units:
        tau = quality.alignment_score_tau(src_text, hyp)
        records.append(
            UtteranceRecord(
                doc=entry.doc,
                direction=entry.direction,
                start_s=span.start_s,
                end_s=span.end_s,
                source_text=src_text,
                target_text=tgt_text,
                scores=QualityScores(sigma=sigma, tau=tau),
                provenance="mined",
            )
        )
    return records


def stage_mine(cfg: PipelineConfig) -> StageSummary:
    collected: dict[str, list[UtteranceRecord]] = {}

    def worker(entry: DocEntry) -> None:
        collected[entry.doc.doc_id] = _doc_records(cfg, entry)

    summary = _run_per_doc(cfg, "mine", worker)
    records = [r for doc_id in sorted(collected) for r in collected[doc_id]]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(Manifest(split="train", records=tuple(records)), _mined_path(cfg))
    return summary


# --- corpus-level stages ----------------------------------------------------

def stage_filter(cfg: PipelineConfig) -> StageSummary:
    mined = read_manifest(_require(_mined_path(cfg)))
    kept, dropped = filter_manifest(mined, cfg.policy)
    write_manifest(kept, cfg.out_dir / "kept.jsonl")
    write_manifest(dropped, cfg.out_dir / "dropped.jsonl")
    return StageSummary(stage="filter", ok=len(kept.records) + len(dropped.records))


def stage_sample(cfg: PipelineConfig) -> StageSummary:
    kept = read_manifest(_require(cfg.out_dir / "kept.jsonl"))
    test, train = sample_test_set(kept, cfg.sample)
    write_manifest(test, cfg.out_dir / "test.jsonl")
    write_manifest(train, cfg.out_dir / "train.jsonl")
    return StageSummary(stage="sample", ok=len(test.records) + len(train.records))


_HISTOGRAM_BINS = 20


def _write_sigma_histograms(cfg: PipelineConfig) -> None:
    """Mining-score distribution per direction, as (bin_low, bin_high, count) CSV."""
    from .quality import histogram_rows, score_histogram

    mined = read_manifest(_mined_path(cfg))
    by_direction: dict[tuple[str, str], list[float]] = {}
    for r in mined.records:
        if r.scores is not None:
            by_direction.setdefault((r.direction.source, r.direction.target), []).append(r.scores.sigma)
    for (src, tgt), sigmas in sorted(by_direction.items()):
        rows = histogram_rows(score_histogram(sigmas, _HISTOGRAM_BINS))
        payload = "bin_low,bin_high,count\n" + "".join(f"{lo},{hi},{c}\n" for lo, hi, c in rows)
        _write_atomic(cfg.out_dir / f"sigma_hist_{src}-{tgt}.csv", payload)


def stage_stats(cfg: PipelineConfig) -> StageSummary:
    manifests = []
    test_path = cfg.out_dir / "test.jsonl"
    train_path = cfg.out_dir / "train.jsonl"
    if test_path.is_file() and train_path.is_file():
        manifests = [read_manifest(test_path, split="test"), read_manifest(train_path, split="train")]
    elif (cfg.out_dir / "kept.jsonl").is_file():
        manifests = [read_manifest(cfg.out_dir / "kept.jsonl")]
    elif _mined_path(cfg).is_file():
        manifests = [read_manifest(_mined_path(cfg))]
    else:
        raise MissingInputError(str(_mined_path(cfg)))
    report = stats_report(manifests)
    _write_atomic(cfg.out_dir / "stats.csv", report.to_csv())
    _write_atomic(cfg.out_dir / "stats.txt", report.to_text())
    if _mined_path(cfg).is_file():
        _write_sigma_histograms(cfg)
    return StageSummary(stage="stats", ok=len(report.rows))


_STAGE_FUNCS = {
    "normalize": stage_normalize,
    "chunk": stage_chunk,
    "align": stage_align,
    "score": stage_score,
    "mine": stage_mine,
    "filter": stage_filter,
    "sample": stage_sample,
    "stats": stage_stats,
}


def run_stage(stage: str, cfg: PipelineConfig, out=None) -> int:
    """Run one stage; returns a process exit code."""
    out = out if out is not None else sys.stdout
    if stage not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}")
    try:
        summary = _STAGE_FUNCS[stage](cfg)
    except MissingInputError as e:
        print(f"stage={stage} error=missing-input path={e}", file=out)
        return EXIT_MISSING_INPUT
    except ValidationError as e:
        print(f"stage={stage} error=validation detail={e}", file=out)
        return EXIT_VALIDATION
    except ConfigError as e:
        print(f"stage={stage} error=config detail={e}", file=out)
        return EXIT_CONFIG
    print(summary.as_line(), file=out)
    if summary.failed and cfg.strict:
        return EXIT_VALIDATION
    return EXIT_OK


def run_all(cfg: PipelineConfig, out=None) -> int:
    """Run every stage in dependency order; halt on stage-level failure."""
    for stage in STAGES:
        code = run_stage(stage, cfg, out=out)
        if code != EXIT_OK:
            return code
    return EXIT_OK
