"""CLI: extract BAF1 feature files from a directory of WAV documents.

    stmine-extract --audio DIR --out DIR --kinds logits,emb,vad --texts FILE

--texts points at a JSONL file mapping doc_id to sentences:
    {"doc_id": "d1", "texts": ["first sentence", "second sentence"]}
Each WAV file's stem is its doc_id.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audio import AudioDecodeError
from .baf import BafError
from .extract import ALL_KINDS, ExtractorJob, extract
from .models import ExtractorConfig, ModelBundle, ModelLoadError


def load_texts(path: Path) -> dict[str, tuple[str, ...]]:
    mapping: dict[str, tuple[str, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                mapping[obj["doc_id"]] = tuple(obj["texts"])
    return mapping


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stmine-extract", description=__doc__)
    parser.add_argument("--audio", type=Path, required=True, help="WAV file or directory of WAV files")
    parser.add_argument("--out", type=Path, required=True, help="output directory for .baf files")
    parser.add_argument("--kinds", default="logits,emb,vad", help="comma list from: logits, emb, vad")
    parser.add_argument("--texts", type=Path, default=None, help="JSONL doc_id -> sentences (for embeddings)")
    parser.add_argument("--asr-model", default="default")
    parser.add_argument("--vad-model", default="default")
    parser.add_argument("--embed-model", default="default")
    parser.add_argument("--seed", type=int, default=127)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    unknown = set(kinds) - set(ALL_KINDS)
    if unknown:
        print(f"error: unknown kinds {sorted(unknown)}", file=sys.stderr)
        return 4

    wavs = sorted(args.audio.glob("*.wav")) if args.audio.is_dir() else [args.audio]
    if not wavs:
        print(f"error: no .wav files under {args.audio}", file=sys.stderr)
        return 2
    texts = load_texts(args.texts) if args.texts else {}

    cfg = ExtractorConfig(
        asr_model=args.asr_model, vad_model=args.vad_model, embed_model=args.embed_model, seed=args.seed
    )
    try:
        bundle = ModelBundle(cfg)
    except ModelLoadError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4

    failures = 0
    for wav in wavs:
        doc_id = wav.stem
        doc_kinds = kinds if doc_id in texts or "emb" not in kinds else tuple(k for k in kinds if k != "emb")
        try:
            job = ExtractorJob(
                audio_path=wav,
                doc_id=doc_id,
                out_dir=args.out,
                kinds=doc_kinds,
                texts=texts.get(doc_id, ()),
            )
            for path in extract(job, bundle=bundle):
                print(f"doc={doc_id} wrote={path}")
        except (AudioDecodeError, BafError, ValueError) as e:
            failures += 1
            print(f"doc={doc_id} error={e}", file=sys.stderr)
    return 0 if failures == 0 else 3


if __name__ == "__main__":
    sys.exit(main())
