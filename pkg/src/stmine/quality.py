"""Quality-control scores for mined pairs.

tau measures audio-transcript fidelity: normalized Levenshtein similarity
between the cleaned reference transcript and the ASR hypothesis. sigma
measures translation fidelity: cosine similarity between cross-lingual
sentence embeddings. Both are bounded so corpus thresholds (sigma >= 0.6,
tau >= 0.8) have exact meaning.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .features import FeatureKind, FeatureMatrix
from .textnorm import clean_text

_MINE_CHUNK_ROWS = 1024


@dataclass(frozen=True)
class ScoredPair:
    source_idx: int
    target_idx: int
    sigma: float


def levenshtein_distance(a: str, b: str) -> int:
    """Minimum edits (insert/delete/substitute) at codepoint granularity."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,        # delete
                current[j - 1] + 1,     # insert
                previous[j - 1] + (ca != cb),  # substitute
            )
        previous = current
    return previous[len(b)]


def _normalize_for_tau(text: str) -> str:
    cleaned = clean_text(text).lower()
    without_punct = "".join(c for c in cleaned if not unicodedata.category(c).startswith("P"))
    return " ".join(without_punct.split())


def alignment_score_tau(reference: str, hypothesis: str) -> float:
    """tau = 1 - d / max(|r|, |h|) over normalized codepoint strings.

    Normalization: clean_text, lowercase, strip punctuation, collapse
    whitespace. Two empty strings score 1.0.
    """
    r = _normalize_for_tau(reference)
    h = _normalize_for_tau(hypothesis)
    longest = max(len(r), len(h))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein_distance(r, h) / longest


def cosine_sigma(u, v) -> float:
    """Cosine similarity, clamped to [-1, 1] against round-off."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine similarity undefined for a zero-norm vector")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def _normalized_rows(m: FeatureMatrix, name: str) -> np.ndarray:
    data = m.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    if (norms == 0.0).any():
        bad = int(np.argmax(norms == 0.0))
        raise ValidationError(f"{name} row {bad} has zero norm")
    return data / norms[:, None]


def mine_pairs(src_emb: FeatureMatrix, tgt_emb: FeatureMatrix) -> list[ScoredPair]:
    """Greedy mining: for each source row, its best-scoring target row.

    Ties go to the smaller target index. Source rows are processed in blocks
    to bound the similarity-matrix working set on large documents.
    """
    for m, name in ((src_emb, "src_emb"), (tgt_emb, "tgt_emb")):
        if m.kind != FeatureKind.EMBEDDINGS:
            raise ValidationError(f"{name} must be an embeddings matrix, got {m.kind.name}")
    if src_emb.cols != tgt_emb.cols:
        raise ValidationError(f"dimension mismatch: src {src_emb.cols} vs tgt {tgt_emb.cols}")
    src = _normalized_rows(src_emb, "src_emb")
    tgt = _normalized_rows(tgt_emb, "tgt_emb")
    pairs: list[ScoredPair] = []
    for base in range(0, src.shape[0], _MINE_CHUNK_ROWS):
        block = src[base : base + _MINE_CHUNK_ROWS]
        sims = block @ tgt.T
        best = np.argmax(sims, axis=1)  # first occurrence wins ties
        for offset, j in enumerate(best):
            sigma = float(np.clip(sims[offset, j], -1.0, 1.0))
            pairs.append(ScoredPair(source_idx=base + offset, target_idx=int(j), sigma=sigma))
    return pairs


def score_histogram(sigmas, bins: int) -> list[int]:
    """Equal-width counts over [0, 1]; right-exclusive except the last bin.

    Scores below 0 clamp into the first bin, matching mining-score plots
    drawn over the [0, 1] range.
    """
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    counts = [0] * bins
    for v in sigmas:
        v = min(1.0, max(0.0, float(v)))
        counts[min(int(v * bins), bins - 1)] += 1
    return counts


def histogram_rows(counts: list[int]) -> list[tuple[float, float, int]]:
    """(bin_low, bin_high, count) rows for CSV export."""
    bins = len(counts)
    return [(i / bins, (i + 1) / bins, c) for i, c in enumerate(counts)]
