"""Monotonic document-level sentence alignment between parallel documents.

A dynamic program pairs source and target sentences in order, allowing 1-1
matches, 1-2 / 2-1 merges (for over-segmented text), and skips on either
side. Matched operations score the cosine similarity of their (mean-pooled)
span embeddings; skips cost a flat penalty. Ties prefer, in order:
one_one, two_one, one_two, skip_src, skip_tgt — applied per cell during the
recursion, which selects a unique decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .features import FeatureKind, FeatureMatrix

OP_ONE_ONE = "one_one"
OP_ONE_TWO = "one_two"
OP_TWO_ONE = "two_one"
OP_SKIP_SRC = "skip_src"
OP_SKIP_TGT = "skip_tgt"

# (src consumed, tgt consumed) per op kind, in tie-break preference order.
OP_SIZES = {
    OP_ONE_ONE: (1, 1),
    OP_TWO_ONE: (2, 1),
    OP_ONE_TWO: (1, 2),
    OP_SKIP_SRC: (1, 0),
    OP_SKIP_TGT: (0, 1),
}
OP_PREFERENCE = (OP_ONE_ONE, OP_TWO_ONE, OP_ONE_TWO, OP_SKIP_SRC, OP_SKIP_TGT)

DEFAULT_SKIP_PENALTY = 0.25


@dataclass(frozen=True)
class AlignOp:
    kind: str
    src_span: tuple[int, int]  # half-open [start, stop)
    tgt_span: tuple[int, int]
    score: float

    def __post_init__(self):
        if self.kind not in OP_SIZES:
            raise ValidationError(f"unknown op kind {self.kind!r}")
        ds, dt = OP_SIZES[self.kind]
        if self.src_span[1] - self.src_span[0] != ds or self.tgt_span[1] - self.tgt_span[0] != dt:
            raise ValidationError(f"span sizes do not match op kind {self.kind}")


def _pooled_unit(data: np.ndarray, start: int, stop: int) -> np.ndarray:
    pooled = data[start:stop].mean(axis=0)
    norm = np.linalg.norm(pooled)
    if norm == 0.0:
        raise ValidationError(f"span [{start}, {stop}) pools to a zero vector")
    return pooled / norm


def align_documents(
    src_emb: FeatureMatrix, tgt_emb: FeatureMatrix, skip_penalty: float = DEFAULT_SKIP_PENALTY
) -> list[AlignOp]:
    """Maximum-score monotone decomposition of two embedding matrices."""
    if skip_penalty < 0:
        raise ValidationError("skip_penalty must be >= 0")
    for m, name in ((src_emb, "src_emb"), (tgt_emb, "tgt_emb")):
        if m.kind != FeatureKind.EMBEDDINGS:
            raise ValidationError(f"{name} must be an embeddings matrix, got {m.kind.name}")
    if src_emb.cols != tgt_emb.cols:
        raise ValidationError(f"dimension mismatch: src {src_emb.cols} vs tgt {tgt_emb.cols}")

    src = src_emb.data.astype(np.float64)
    tgt = tgt_emb.data.astype(np.float64)
    n, m = src.shape[0], tgt.shape[0]

    src_unit = np.stack([_pooled_unit(src, i, i + 1) for i in range(n)])
    tgt_unit = np.stack([_pooled_unit(tgt, j, j + 1) for j in range(m)])
    sim_11 = np.clip(src_unit @ tgt_unit.T, -1.0, 1.0)
    if n >= 2:
        src2 = np.stack([_pooled_unit(src, i, i + 2) for i in range(n - 1)])
        sim_21 = np.clip(src2 @ tgt_unit.T, -1.0, 1.0)
    if m >= 2:
        tgt2 = np.stack([_pooled_unit(tgt, j, j + 2) for j in range(m - 1)])
        sim_12 = np.clip(src_unit @ tgt2.T, -1.0, 1.0)

    neg_inf = -math.inf
    best = np.full((n + 1, m + 1), neg_inf)
    best[0][0] = 0.0
    choice: list[list[tuple[str, float] | None]] = [[None] * (m + 1) for _ in range(n + 1)]

    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            cell_best = neg_inf
            cell_choice = None
            for kind in OP_PREFERENCE:
                ds, dt = OP_SIZES[kind]
                pi, pj = i - ds, j - dt
                if pi < 0 or pj < 0 or best[pi][pj] == neg_inf:
                    continue
                if kind == OP_ONE_ONE:
                    op_score = float(sim_11[i - 1][j - 1])
                elif kind == OP_TWO_ONE:
                    op_score = float(sim_21[i - 2][j - 1])
                elif kind == OP_ONE_TWO:
                    op_score = float(sim_12[i - 1][j - 2])
                else:
                    op_score = -skip_penalty
                total = best[pi][pj] + op_score
                if total > cell_best:
                    cell_best = total
                    cell_choice = (kind, op_score)
            best[i][j] = cell_best
            choice[i][j] = cell_choice

    ops_rev: list[AlignOp] = []
    i, j = n, m
    while i or j:
        kind, op_score = choice[i][j]
        ds, dt = OP_SIZES[kind]
        ops_rev.append(AlignOp(kind=kind, src_span=(i - ds, i), tgt_span=(j - dt, j), score=op_score))
        i, j = i - ds, j - dt
    return list(reversed(ops_rev))


def total_score(ops: Sequence[AlignOp]) -> float:
    return sum(op.score for op in ops)


def validate_ops(ops: Sequence[AlignOp], n_src: int, n_tgt: int) -> None:
    """Coverage and monotonicity: every index appears in exactly one op."""
    i = j = 0
    for op in ops:
        if op.src_span[0] != i or op.tgt_span[0] != j:
            raise ValidationError(f"op {op.kind} at ({op.src_span}, {op.tgt_span}) breaks coverage")
        i, j = op.src_span[1], op.tgt_span[1]
    if (i, j) != (n_src, n_tgt):
        raise ValidationError(f"ops cover ({i}, {j}) of ({n_src}, {n_tgt})")


def ops_to_pairs(
    ops: Sequence[AlignOp], src_sents: Sequence[str], tgt_sents: Sequence[str]
) -> list[tuple[str, str, float]]:
    """Materialize matched text pairs; merges join sentences with a space."""
    pairs = []
    for op in ops:
        if op.kind in (OP_SKIP_SRC, OP_SKIP_TGT):
            continue
        src_text = " ".join(src_sents[op.src_span[0] : op.src_span[1]])
        tgt_text = " ".join(tgt_sents[op.tgt_span[0] : op.tgt_span[1]])
        pairs.append((src_text, tgt_text, op.score))
    return pairs
