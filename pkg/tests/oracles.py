"""Independent reference implementations used to check the fast paths.

Everything here is deliberately written the slow, obvious way (exhaustive
enumeration, full DP tables, dict counting) and shares no code with the
package internals it checks.
"""

from collections import Counter
from itertools import product


# --- CTC forced alignment: exhaustive path enumeration -----------------------

def ctc_enumerate_paths(log_probs, tokens, blank):
    """All valid CTC state paths with their scores.

    States walk the extended sequence [blank, y1, blank, ..., yL, blank];
    a path starts in state 0 or 1, moves by 0, +1, or +2 (the +2 skip only
    into a non-blank state with a different label than two back), and ends
    in one of the last two states. Scores accumulate frame by frame in the
    same order as a forward pass.
    """
    n_frames = len(log_probs)
    n_labels = len(tokens)
    n_states = 2 * n_labels + 1
    labels = [blank if s % 2 == 0 else tokens[s // 2] for s in range(n_states)]
    finished = []

    def walk(path, score):
        t = len(path)
        if t == n_frames:
            if path[-1] in (n_states - 1, n_states - 2):
                finished.append((score, list(path)))
            return
        s = path[-1]
        nexts = [s, s + 1]
        if s + 2 < n_states and labels[s + 2] != blank and labels[s + 2] != labels[s]:
            nexts.append(s + 2)
        for nxt in nexts:
            if nxt < n_states:
                walk(path + [nxt], score + log_probs[t][labels[nxt]])

    for start in (0, 1):
        if start < n_states:
            walk([start], log_probs[0][labels[start]])
    return finished


def ctc_oracle_best(log_probs, tokens, blank):
    """(score, path) the documented tie-break selects among all argmax paths.

    Tie-break: prefer ending in the final blank, then compare transitions
    backwards from the end, preferring stay over advance-1 over advance-2.
    """
    paths = ctc_enumerate_paths(log_probs, tokens, blank)
    assert paths, "no feasible path"
    best_score = max(score for score, _ in paths)
    n_states = 2 * len(tokens) + 1

    def key(path):
        end_rank = 0 if path[-1] == n_states - 1 else 1
        steps = [path[t] - path[t - 1] for t in range(len(path) - 1, 0, -1)]
        return [end_rank] + steps

    winner = min((p for s, p in paths if s == best_score), key=key)
    return best_score, winner


def ctc_oracle_token_spans(path, n_labels):
    spans = []
    for i in range(n_labels):
        state = 2 * i + 1
        frames = [t for t, s in enumerate(path) if s == state]
        spans.append((frames[0], frames[-1]))
    return spans


# --- bitext alignment: exhaustive decomposition enumeration -------------------

BITEXT_OPS = ("one_one", "two_one", "one_two", "skip_src", "skip_tgt")
_OP_STEPS = {"one_one": (1, 1), "two_one": (2, 1), "one_two": (1, 2), "skip_src": (1, 0), "skip_tgt": (0, 1)}


def bitext_enumerate(n_src, n_tgt, score_fn, skip_penalty):
    """All monotone decompositions as (total_score, [(kind, i, j), ...]).

    score_fn(kind, i, j) gives the matched-op score for the op consuming
    source up to i and target up to j (exclusive).
    """
    results = []

    def walk(i, j, ops, score):
        if i == n_src and j == n_tgt:
            results.append((score, list(ops)))
            return
        for kind in BITEXT_OPS:
            di, dj = _OP_STEPS[kind]
            ni, nj = i + di, j + dj
            if ni > n_src or nj > n_tgt:
                continue
            if kind.startswith("skip"):
                op_score = -skip_penalty
            else:
                op_score = score_fn(kind, ni, nj)
            ops.append((kind, ni, nj))
            walk(ni, nj, ops, score + op_score)
            ops.pop()

    walk(0, 0, [], 0.0)
    return results


def bitext_oracle_best(n_src, n_tgt, score_fn, skip_penalty):
    """Argmax decomposition under the documented tie-break.

    Ties compare op kinds backwards from the end of the decomposition in the
    preference order one_one > two_one > one_two > skip_src > skip_tgt.
    """
    results = bitext_enumerate(n_src, n_tgt, score_fn, skip_penalty)
    best_score = max(score for score, _ in results)
    rank = {kind: r for r, kind in enumerate(BITEXT_OPS)}

    def key(ops):
        return [rank[kind] for kind, _, _ in reversed(ops)]

    winner = min((ops for score, ops in results if score == best_score), key=key)
    return best_score, winner


# --- Levenshtein: full-matrix textbook DP ------------------------------------

def levenshtein_oracle(a, b):
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        table[i][0] = i
    for j in range(cols):
        table[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + cost,
            )
    return table[-1][-1]


# --- chrF++: dict-based n-gram counting oracle --------------------------------

_ORACLE_PUNCT = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~") | {"।", "॥", "۔", "؟", "…"}


def _oracle_words(text):
    words = []
    for token in text.split():
        if len(token) > 1 and token[-1] in _ORACLE_PUNCT:
            words.extend([token[:-1], token[-1]])
        elif len(token) > 1 and token[0] in _ORACLE_PUNCT:
            words.extend([token[0], token[1:]])
        else:
            words.append(token)
    return words


def _oracle_grams(items, n):
    return Counter(tuple(items[i : i + n]) for i in range(len(items) - n + 1))


def chrf_oracle(hypotheses, references, char_order=6, word_order=2, beta=2.0):
    """Corpus chrF++ from first principles (counts summed across segments)."""
    stats = []
    for n in range(1, char_order + 1):
        hyp_total = ref_total = match = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_chars = list("".join(hyp.split()))
            ref_chars = list("".join(ref.split()))
            hyp_counts = _oracle_grams(hyp_chars, n)
            ref_counts = _oracle_grams(ref_chars, n)
            hyp_total += sum(hyp_counts.values())
            ref_total += sum(ref_counts.values())
            match += sum(min(hyp_counts[g], ref_counts[g]) for g in hyp_counts)
        stats.append((hyp_total, ref_total, match))
    for n in range(1, word_order + 1):
        hyp_total = ref_total = match = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_counts = _oracle_grams(_oracle_words(hyp), n)
            ref_counts = _oracle_grams(_oracle_words(ref), n)
            hyp_total += sum(hyp_counts.values())
            ref_total += sum(ref_counts.values())
            match += sum(min(hyp_counts[g], ref_counts[g]) for g in hyp_counts)
        stats.append((hyp_total, ref_total, match))

    f_values = []
    for hyp_total, ref_total, match in stats:
        if hyp_total + ref_total == 0:
            continue
        precision = match / hyp_total if hyp_total else 0.0
        recall = match / ref_total if ref_total else 0.0
        denom = beta * beta * precision + recall
        f_values.append((1 + beta * beta) * precision * recall / denom if denom > 0 else 0.0)
    if not f_values:
        return 0.0
    return 100.0 * sum(f_values) / len(f_values)
