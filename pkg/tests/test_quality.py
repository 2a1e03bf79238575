import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import levenshtein_oracle
from stmine.errors import ValidationError
from stmine.features import FeatureKind, FeatureMatrix
from stmine.quality import (
    alignment_score_tau,
    cosine_sigma,
    histogram_rows,
    levenshtein_distance,
    mine_pairs,
    score_histogram,
)


def embeddings(rows):
    return FeatureMatrix(kind=FeatureKind.EMBEDDINGS, data=np.asarray(rows, dtype=np.float32))


class TestLevenshtein:
    def test_pure_insertion(self):
        assert levenshtein_distance("", "abc") == 3

    def test_kitten_sitting(self):
        assert levenshtein_distance("kitten", "sitting") == 3

    def test_identity(self):
        assert levenshtein_distance("same text", "same text") == 0

    def test_codepoint_granularity(self):
        # conjunct cluster: 4 codepoints vs 2
        assert levenshtein_distance("क्षि", "कि") == 2

    def test_against_textbook_oracle(self):
        rng = random.Random(99)
        alphabet = "abcdeकख "
        for _ in range(1000):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 21)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 21)))
            assert levenshtein_distance(a, b) == levenshtein_oracle(a, b)

    @given(st.text(max_size=15), st.text(max_size=15), st.text(max_size=15))
    def test_symmetry_and_triangle(self, a, b, c):
        assert levenshtein_distance(a, b) == levenshtein_distance(b, a)
        assert levenshtein_distance(a, c) <= levenshtein_distance(a, b) + levenshtein_distance(b, c)


class TestTau:
    def test_identical(self):
        assert alignment_score_tau("same words here", "same words here") == 1.0

    def test_kitten_sitting_exact(self):
        assert alignment_score_tau("kitten", "sitting") == 1 - 3 / 7

    def test_total_mismatch(self):
        assert alignment_score_tau("abc", "") == 0.0

    def test_both_empty(self):
        assert alignment_score_tau("", "") == 1.0

    def test_normalization_inside(self):
        # case, punctuation, and whitespace differences vanish
        assert alignment_score_tau("Hello,   World!", "hello world") == 1.0

    def test_symmetry(self):
        assert alignment_score_tau("kitten", "sitting") == alignment_score_tau("sitting", "kitten")

    @given(st.text(alphabet="abc क.!", max_size=30), st.text(alphabet="abc क.!", max_size=30))
    def test_bounded(self, a, b):
        assert 0.0 <= alignment_score_tau(a, b) <= 1.0


class TestCosine:
    def test_self_similarity(self):
        assert cosine_sigma([1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_sigma([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_computed(self):
        expected = 32.0 / (math.sqrt(14.0) * math.sqrt(77.0))
        assert cosine_sigma([1, 2, 3], [4, 5, 6]) == pytest.approx(expected, abs=1e-9)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValidationError, match="zero-norm"):
            cosine_sigma([0.0, 0.0], [1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            cosine_sigma([1.0], [1.0, 2.0])

    @given(
        st.lists(st.floats(min_value=-5, max_value=5), min_size=3, max_size=3),
        st.floats(min_value=0.01, max_value=100.0),
        st.floats(min_value=0.01, max_value=100.0),
    )
    def test_scale_invariance(self, vec, alpha, beta):
        u = np.array(vec) + np.array([1.0, 0.5, 0.25])  # keep away from zero
        v = np.array([0.3, -0.4, 1.1])
        base = cosine_sigma(u, v)
        scaled = cosine_sigma(alpha * u, beta * v)
        assert scaled == pytest.approx(base, abs=1e-6)


class TestMinePairs:
    def test_self_mining_identity(self):
        m = embeddings(np.eye(4))
        pairs = mine_pairs(m, m)
        assert [(p.source_idx, p.target_idx) for p in pairs] == [(i, i) for i in range(4)]
        assert all(p.sigma == pytest.approx(1.0, abs=1e-7) for p in pairs)

    def test_hand_built_argmax(self):
        src = embeddings([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        tgt = embeddings([[0.0, 0.9, 0.1], [0.2, 0.0, 0.9], [0.95, 0.05, 0.0]])
        pairs = mine_pairs(src, tgt)
        # row 0 matches target 2 best; row 1 matches target 0
        assert (pairs[0].source_idx, pairs[0].target_idx) == (0, 2)
        assert (pairs[1].source_idx, pairs[1].target_idx) == (1, 0)

    def test_single_pair(self):
        pairs = mine_pairs(embeddings([[1.0, 1.0]]), embeddings([[2.0, 2.0]]))
        assert len(pairs) == 1
        assert pairs[0].sigma == pytest.approx(1.0, abs=1e-7)

    def test_tie_prefers_smaller_index(self):
        src = embeddings([[1.0, 0.0]])
        tgt = embeddings([[1.0, 0.0], [2.0, 0.0]])  # identical directions
        assert mine_pairs(src, tgt)[0].target_idx == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            mine_pairs(embeddings([[1.0, 0.0]]), embeddings([[1.0, 0.0, 0.0]]))

    def test_zero_row_rejected(self):
        with pytest.raises(ValidationError, match="zero norm"):
            mine_pairs(embeddings([[0.0, 0.0]]), embeddings([[1.0, 0.0]]))

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(4)
        src = embeddings(rng.normal(size=(5, 8)))
        tgt_rows = rng.normal(size=(6, 8))
        perm = [3, 0, 5, 1, 4, 2]
        base = mine_pairs(src, embeddings(tgt_rows))
        permuted = mine_pairs(src, embeddings(tgt_rows[perm]))
        inverse = {orig: new for new, orig in enumerate(perm)}
        for b, p in zip(base, permuted):
            assert p.target_idx == inverse[b.target_idx]
            assert p.sigma == pytest.approx(b.sigma, abs=1e-12)

    def test_chunked_path_consistent(self):
        rng = np.random.default_rng(8)
        src = embeddings(rng.normal(size=(2050, 4)))  # crosses the 1024-row block size
        tgt = embeddings(rng.normal(size=(7, 4)))
        pairs = mine_pairs(src, tgt)
        assert len(pairs) == 2050
        assert [p.source_idx for p in pairs] == list(range(2050))


class TestHistogram:
    def test_empty(self):
        assert score_histogram([], 4) == [0, 0, 0, 0]

    def test_boundary_handling(self):
        assert score_histogram([0.0, 0.999, 1.0], 2) == [1, 2]

    def test_counts_sum(self):
        rng = random.Random(7)
        values = [rng.uniform(-1, 1) for _ in range(1000)]
        counts = score_histogram(values, 20)
        assert sum(counts) == 1000

    def test_negative_values_clamp_to_first_bin(self):
        assert score_histogram([-0.5, -1.0], 4) == [2, 0, 0, 0]

    def test_rows_for_csv(self):
        rows = histogram_rows([1, 2])
        assert rows == [(0.0, 0.5, 1), (0.5, 1.0, 2)]

    def test_bins_validated(self):
        with pytest.raises(ValidationError):
            score_histogram([0.5], 0)
