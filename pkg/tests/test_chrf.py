import random

import pytest

from oracles import chrf_oracle
from stmine.chrf import ChrfConfig, ChrfReport, chrf_pp, tokenize_indic
from stmine.errors import ValidationError


class TestDegenerateCases:
    def test_identity_scores_100(self):
        report = chrf_pp(["the cat sat on the mat"], ["the cat sat on the mat"])
        assert report.corpus_score == pytest.approx(100.0, abs=1e-9)
        assert report.per_segment[0] == pytest.approx(100.0, abs=1e-9)

    def test_empty_hypothesis_scores_0(self):
        report = chrf_pp([""], ["reference text"])
        assert report.corpus_score == 0.0

    def test_short_identity_uses_effective_order(self):
        # "ab" has no char n-grams above order 2 and no word bigrams:
        # those orders are excluded, not scored as zero
        report = chrf_pp(["ab"], ["ab"])
        assert report.corpus_score == pytest.approx(100.0, abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            chrf_pp(["a"], ["a", "b"])

    def test_empty_reference_set(self):
        with pytest.raises(ValidationError):
            chrf_pp([], [])

    def test_case_sensitive(self):
        mixed = chrf_pp(["The Cat"], ["the cat"]).corpus_score
        assert mixed < 100.0


HAND_CASES = [
    (["cat"], ["cat sat"]),
    (["the quick fox"], ["the quick brown fox"]),
    (["abc def"], ["abd cef"]),
    (["one two three four"], ["one two three four five"]),
    (["नमस्ते दुनिया"],
     ["नमस्ते संसार"]),
]


class TestOracleCases:
    @pytest.mark.parametrize("hyps,refs", HAND_CASES)
    def test_matches_counting_oracle(self, hyps, refs):
        got = chrf_pp(hyps, refs).corpus_score
        expected = chrf_oracle(hyps, refs)
        assert got == pytest.approx(expected, abs=0.01)

    def test_corpus_aggregates_counts_not_segment_means(self):
        hyps = ["aaaa", "zzzz bbbb cccc"]
        refs = ["aaaa", "zzzz bbbb dddd"]
        report = chrf_pp(hyps, refs)
        mean_of_segments = sum(report.per_segment) / 2
        assert report.corpus_score == pytest.approx(chrf_oracle(hyps, refs), abs=0.01)
        assert abs(report.corpus_score - mean_of_segments) > 0.5

    def test_multi_segment_oracle(self):
        hyps = ["the cat", "sat on", "a mat today"]
        refs = ["the cat", "sat upon", "a mat now"]
        assert chrf_pp(hyps, refs).corpus_score == pytest.approx(chrf_oracle(hyps, refs), abs=0.01)


class TestSpaceNo:
    def test_char_stats_ignore_whitespace(self):
        base = chrf_pp(["abcd efgh"], ["abcd efgh"]).corpus_score
        spaced = chrf_pp(["abcd  efgh"], ["abcd efgh"]).corpus_score
        assert spaced == pytest.approx(base, abs=1e-9)

    def test_extra_spaces_between_words_never_change_score(self):
        rng = random.Random(3)
        for hyp, ref in [("the cat sat", "the cat sat on"), ("a b c", "a c b")]:
            base = chrf_pp([hyp], [ref]).corpus_score
            noisy = " ".join(tok + " " * rng.randrange(1, 4) for tok in hyp.split()).strip()
            assert chrf_pp([noisy], [ref]).corpus_score == pytest.approx(base, abs=1e-9)


class TestMonotoneImprovement:
    def test_completing_hypothesis_never_hurts(self):
        ref = "the quick brown fox jumps over the lazy dog"
        words = ref.split()
        previous = 0.0
        for i in range(1, len(words) + 1):
            hyp = " ".join(words[:i])
            score = chrf_pp([hyp], [ref]).corpus_score
            assert score >= previous - 1e-9
            previous = score
        assert previous == pytest.approx(100.0, abs=1e-9)


class TestConfig:
    def test_score_bounds(self):
        rng = random.Random(11)
        for _ in range(50):
            hyp = " ".join("".join(rng.choice("abcd") for _ in range(rng.randrange(1, 5))) for _ in range(3))
            ref = " ".join("".join(rng.choice("abcd") for _ in range(rng.randrange(1, 5))) for _ in range(3))
            score = chrf_pp([hyp], [ref]).corpus_score
            assert 0.0 <= score <= 100.0

    def test_beta_weights_recall(self):
        # hypothesis is a superset of the reference: precision suffers.
        # beta=2 weights recall higher, so the score should be higher than beta=1
        hyp = ["the cat sat on the mat extra words here"]
        ref = ["the cat sat"]
        b2 = chrf_pp(hyp, ref, ChrfConfig(beta=2.0)).corpus_score
        b1 = chrf_pp(hyp, ref, ChrfConfig(beta=1.0)).corpus_score
        assert b2 > b1

    def test_signature_defaults(self):
        cfg = ChrfConfig()
        assert (cfg.char_order, cfg.word_order, cfg.beta) == (6, 2, 2.0)
        assert cfg.effective_order and not cfg.lowercase and cfg.remove_whitespace


class TestIndicTokenizer:
    def test_danda_detached(self):
        assert tokenize_indic("यह है।") == ["यह", "है", "।"]

    def test_plain_words(self):
        assert tokenize_indic("a b") == ["a", "b"]

    def test_empty(self):
        assert tokenize_indic("") == []

    def test_urdu_full_stop(self):
        assert tokenize_indic("بس۔", "urd") == ["بس", "۔"]

    def test_stacked_terminals(self):
        assert tokenize_indic("x।।") == ["x", "।", "।"]

    def test_deterministic(self):
        text = "अच्छा है। y?"
        assert tokenize_indic(text) == tokenize_indic(text)
