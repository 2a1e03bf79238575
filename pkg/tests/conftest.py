"""Shared fixture builders.

`mini_corpus` constructs the 3-document workspace used by the end-to-end
tests: logits are synthesized so that greedy decoding reproduces a designed
character stream, embeddings are built from integer-coordinate vectors whose
cosines are exact rationals, and every expected sigma/tau value is computed
arithmetically here, not by calling the code under test.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from stmine.features import FeatureKind, FeatureMatrix, TokenVocab, write_features, write_vocab

BLANK = "<b>"
DELIM = "|"
VOCAB_TOKENS = (BLANK, DELIM) + tuple("abcdefghijklmnopqrstuvwxyz")
FRAME_SECONDS = 0.08


def make_vocab() -> TokenVocab:
    return TokenVocab(tokens=VOCAB_TOKENS, blank_index=0)


def emission_plan(text: str) -> list[str]:
    """Frame-by-frame emission for a sentence stream.

    Words and sentence boundaries become the delimiter token; a blank frame
    follows every emission so adjacent duplicates never collapse and forced
    alignment always has room.
    """
    symbols = []
    for ch in text:
        symbols.append(DELIM if ch == " " else ch)
    plan = []
    for sym in symbols:
        plan.append(sym)
        plan.append(BLANK)
    return plan


def logits_for_plan(plan: list[str], vocab: TokenVocab, peak: float = 0.9) -> FeatureMatrix:
    """One frame per plan entry; the planned token gets probability `peak`."""
    n_vocab = len(vocab)
    rest = (1.0 - peak) / (n_vocab - 1)
    rows = np.full((len(plan), n_vocab), rest, dtype=np.float64)
    for t, sym in enumerate(plan):
        rows[t, vocab.index_of(sym)] = peak
    return FeatureMatrix(kind=FeatureKind.LOGITS, data=np.log(rows), frame_seconds=FRAME_SECONDS)


def unit_embeddings(rows: list[list[float]]) -> FeatureMatrix:
    return FeatureMatrix(kind=FeatureKind.EMBEDDINGS, data=np.array(rows, dtype=np.float32), frame_seconds=0.0)


@dataclass
class MiniCorpus:
    workspace: Path
    expected_kept: int
    expected_dropped: int
    # (doc_id, source_text) -> (sigma, tau) designed by construction
    expected_scores: dict


@pytest.fixture
def mini_corpus(tmp_path) -> MiniCorpus:
    return build_mini_corpus(tmp_path / "ws")


def build_mini_corpus(ws: Path) -> MiniCorpus:
    """Three En->Indic documents with designed quality scores.

    doc1 (eng->hin): both sentences good; sigmas 1.0 and 4/5.
    doc2 (eng->tam): sentence 1 sigma exactly 3/5 (threshold boundary, kept);
      sentence 2 decodes with 3 substituted characters out of 12 -> tau 0.75
      (dropped by the tau threshold).
    doc3 (eng->hin): sentence 1 good; sentence 2 sigma 7/25 = 0.28 (dropped).

    Expected after filtering at sigma >= 0.6, tau >= 0.8: 4 kept, 2 dropped.
    """
    vocab = make_vocab()
    (ws / "raw").mkdir(parents=True)
    (ws / "features").mkdir()
    write_vocab(vocab, ws / "features" / "vocab.json")

    # Unit basis: source sentence i uses axis i; axis 2 is the shared
    # off-target component, axis 3 is spare.
    e = np.eye(4)

    docs = []

    def add_doc(doc_id, tgt_lang, src_sentences, tgt_sentences, tgt_rows, decode_texts):
        """decode_texts: what greedy decoding should produce per sentence."""
        stream = " ".join(decode_texts)
        plan = emission_plan(stream)
        logits = logits_for_plan(plan, vocab)
        n_frames = logits.rows
        audio_seconds = round(n_frames * logits.frame_seconds, 6)

        vad = FeatureMatrix(
            kind=FeatureKind.VAD_PROBS,
            data=np.full((n_frames, 1), 0.95, dtype=np.float32),
            frame_seconds=logits.frame_seconds,
        )
        src_rows = [e[i].tolist() for i in range(len(src_sentences))]
        write_features(logits, ws / "features" / f"{doc_id}.logits.baf")
        write_features(vad, ws / "features" / f"{doc_id}.vad.baf")
        write_features(unit_embeddings(src_rows), ws / "features" / f"{doc_id}.src.emb.baf")
        write_features(unit_embeddings(tgt_rows), ws / "features" / f"{doc_id}.tgt.emb.baf")

        (ws / "raw" / f"{doc_id}.src.txt").write_text(". ".join(src_sentences) + ".", encoding="utf-8")
        (ws / "raw" / f"{doc_id}.tgt.txt").write_text("। ".join(tgt_sentences) + "।", encoding="utf-8")
        docs.append(
            {
                "doc_id": doc_id,
                "audio_path": f"audio/{doc_id}.wav",
                "audio_seconds": audio_seconds,
                "sample_rate_hz": 16000,
                "src_lang": "eng",
                "tgt_lang": tgt_lang,
                "src_text_path": f"raw/{doc_id}.src.txt",
                "tgt_text_path": f"raw/{doc_id}.tgt.txt",
            }
        )

    expected_scores = {}

    # doc1: clean decodes, sigmas 1.0 and 0.8
    add_doc(
        "doc1",
        "hin",
        ["hello world", "good morning"],
        ["नमस्ते दुनिया",
         "शुभ प्रभात"],
        tgt_rows=[(5.0 * e[0]).tolist(), (4.0 * e[1] + 3.0 * e[2]).tolist()],
        decode_texts=["hello world", "good morning"],
    )
    expected_scores[("doc1", "hello world")] = (1.0, 1.0)
    expected_scores[("doc1", "good morning")] = (4.0 / 5.0, 1.0)

    # doc2: boundary sigma 3/5 on sentence 1; corrupted decode on sentence 2.
    # "good morning" (12 codepoints) decoded as "gxod myrnzng": substitutions
    # at three isolated positions -> edit distance 3 -> tau = 1 - 3/12 = 0.75.
    add_doc(
        "doc2",
        "tam",
        ["fine day", "good morning"],
        ["அழகான நாள",
         "காலை வணக்கம்"],
        tgt_rows=[(3.0 * e[0] + 4.0 * e[2]).tolist(), (5.0 * e[1]).tolist()],
        decode_texts=["fine day", "gxod myrnzng"],
    )
    expected_scores[("doc2", "fine day")] = (3.0 / 5.0, 1.0)
    expected_scores[("doc2", "good morning")] = (1.0, 1.0 - 3.0 / 12.0)

    # doc3: sentence 2 sigma 7/25, dropped.
    add_doc(
        "doc3",
        "hin",
        ["see you soon", "take care"],
        ["फिर मिलेंगे",
         "ध्यान रखना"],
        tgt_rows=[(5.0 * e[0]).tolist(), (7.0 * e[1] + 24.0 * e[2]).tolist()],
        decode_texts=["see you soon", "take care"],
    )
    expected_scores[("doc3", "see you soon")] = (1.0, 1.0)
    expected_scores[("doc3", "take care")] = (7.0 / 25.0, 1.0)

    with open(ws / "docs.jsonl", "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, ensure_ascii=False) + "\n")

    return MiniCorpus(workspace=ws, expected_kept=4, expected_dropped=2, expected_scores=expected_scores)
