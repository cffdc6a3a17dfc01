"""Independent reference implementations used only to check the package.

Everything here is deliberately written in a different style from the
library code (plain loops, naive recursion, fsum arithmetic) so the two
sides cannot share a bug.
"""

from __future__ import annotations

import math
import re


def naive_edit_distance(a, b) -> int:
    """Textbook exponential recursion for total edit count, no memoization."""
    la, lb = len(a), len(b)

    def go(i: int, j: int) -> int:
        if i == la:
            return lb - j
        if j == lb:
            return la - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j + 1), go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def dp_edit_distance(a, b) -> int:
    """Cost-only DP over full matrix; independent of the library's rolling rows."""
    m, n = len(a), len(b)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dist[i][0] = i
    for j in range(n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(
                dist[i - 1][j - 1] + cost,
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
            )
    return dist[m][n]


def oracle_wer(reference: str, hypothesis: str) -> float:
    """WER with default normalization (whitespace collapse only)."""
    ref = reference.split()
    hyp = hypothesis.split()
    return dp_edit_distance(ref, hyp) / len(ref)


def oracle_cer(reference: str, hypothesis: str) -> float:
    ref = list(" ".join(reference.split()))
    hyp = list(" ".join(hypothesis.split()))
    return dp_edit_distance(ref, hyp) / len(ref)


# -- pooling: direct formula per strategy, plain loops ----------------------


def _vec_scale(vec, s):
    return [x * s for x in vec]


def _vec_add(u, v):
    return [x + y for x, y in zip(u, v)]


def _direct_mean(vectors):
    total = [0.0] * len(vectors[0])
    for vec in vectors:
        total = _vec_add(total, vec)
    return _vec_scale(total, 1.0 / len(vectors))


def _direct_weighted(vectors):
    total = [0.0] * len(vectors[0])
    weight_sum = 0.0
    for idx, vec in enumerate(vectors, start=1):
        total = _vec_add(total, _vec_scale(vec, float(idx)))
        weight_sum += idx
    return _vec_scale(total, 1.0 / weight_sum)


def direct_pool(vectors, strategy_name: str):
    """Direct formula per strategy name, including the short-sequence fallbacks."""
    n = len(vectors)
    if strategy_name == "last":
        return list(vectors[-1])
    if strategy_name == "second_last":
        return list(vectors[-2]) if n >= 2 else list(vectors[-1])
    if strategy_name == "mean":
        return _direct_mean(vectors)
    if strategy_name == "mean_no_last":
        return _direct_mean(vectors[:-1]) if n >= 2 else list(vectors[-1])
    if strategy_name == "weighted":
        return _direct_weighted(vectors)
    if strategy_name == "weighted_no_last":
        return _direct_weighted(vectors[:-1]) if n >= 2 else list(vectors[-1])
    if strategy_name == "mean_last4":
        return _direct_mean(vectors[-4:]) if n >= 4 else _direct_mean(vectors)
    raise ValueError(strategy_name)


def direct_cosine(u, v) -> float:
    if list(u) == list(v):
        return 1.0
    dot = math.fsum(x * y for x, y in zip(u, v))
    norm_u = math.sqrt(math.fsum(x * x for x in u))
    norm_v = math.sqrt(math.fsum(y * y for y in v))
    return max(-1.0, min(1.0, dot / (norm_u * norm_v)))


def direct_semdist(ref_vectors, hyp_vectors, strategy_name: str) -> float:
    return 1.0 - direct_cosine(
        direct_pool(ref_vectors, strategy_name), direct_pool(hyp_vectors, strategy_name)
    )


# -- agreement recount -------------------------------------------------------


def recount_agreement(rows):
    """Brute-force recount over (gold, preference) pairs.

    ``rows`` holds (gold, pref) tuples with gold in {"A", "B", None} (None =
    no majority) and pref in {"A", "B", "equal", None} (None = failed).
    Returns (n, agree_pct, equal_pct, disagree_pct, n_no_majority, n_failed).
    """
    agree = equal = disagree = no_majority = failed = 0
    for gold, pref in rows:
        if gold is None:
            no_majority += 1
        elif pref is None:
            failed += 1
        elif pref == gold:
            agree += 1
        elif pref == "equal":
            equal += 1
        else:
            disagree += 1
    n = agree + equal + disagree
    if n == 0:
        return 0, 0.0, 0.0, 0.0, no_majority, failed
    return (
        n,
        100.0 * agree / n,
        100.0 * equal / n,
        100.0 * disagree / n,
        no_majority,
        failed,
    )


def tail_letter(response: str) -> str | None:
    """Last standalone A/B/a/b in a response, written independently of the parser."""
    found = None
    for match in re.finditer(r"[A-Za-z]+", response):
        if match.group(0) in ("A", "B", "a", "b"):
            found = match.group(0)
    return found


def type7_quantile(scores, p: float) -> float:
    """Reference quantile via numpy's default linear interpolation."""
    import numpy as np

    return float(np.quantile(np.asarray(scores, dtype=float), p))
