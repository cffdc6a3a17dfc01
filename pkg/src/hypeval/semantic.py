"""Pool token embeddings into one vector and score semantic distance.

Semantic distance between a reference and a hypothesis is one minus the
cosine similarity of their pooled embeddings: 0 for identical embeddings,
up to 2 for antipodal ones.  Lower is better.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .llm import TokenEmbeddingSequence

logger = logging.getLogger(__name__)

Embedder = Callable[[str], TokenEmbeddingSequence]


class PoolingStrategy(Enum):
    """How to collapse a per-token embedding sequence into one vector.

    Values are the names used in CLI flags, config files, and reports.
    """

    LAST_TOKEN = "last"
    SECOND_TO_LAST = "second_last"
    MEAN = "mean"
    MEAN_WITHOUT_LAST = "mean_no_last"
    WEIGHTED_MEAN = "weighted"
    WEIGHTED_MEAN_WITHOUT_LAST = "weighted_no_last"
    MEAN_LAST_4 = "mean_last4"


ALL_STRATEGIES = tuple(PoolingStrategy)


def parse_strategy(name: str) -> PoolingStrategy:
    try:
        return PoolingStrategy(name)
    except ValueError:
        valid = ", ".join(s.value for s in ALL_STRATEGIES)
        raise ValueError(f"unknown pooling strategy '{name}' (expected one of: {valid})") from None


@dataclass(frozen=True, eq=False)
class PooledEmbedding:
    vector: np.ndarray
    dim: int
    strategy: PoolingStrategy
    model_id: str


def pool(seq: TokenEmbeddingSequence, strategy: PoolingStrategy) -> PooledEmbedding:
    """Aggregate token vectors under one strategy.

    Sequences shorter than a strategy's window fall back to a defined
    neighbor so every strategy is total for n >= 1:
    second-to-last and the without-last variants fall back to the last
    token at n=1; mean-of-last-4 falls back to the plain mean for n < 4.
    Accumulation is in double precision regardless of transport precision.
    """
    n = len(seq.vectors)
    t = np.asarray(seq.vectors, dtype=np.float64)

    if strategy is PoolingStrategy.LAST_TOKEN:
        vector = t[-1].copy()
    elif strategy is PoolingStrategy.SECOND_TO_LAST:
        if n == 1:
            _log_fallback(seq, strategy, "last token")
            vector = t[-1].copy()
        else:
            vector = t[-2].copy()
    elif strategy is PoolingStrategy.MEAN:
        vector = t.mean(axis=0)
    elif strategy is PoolingStrategy.MEAN_WITHOUT_LAST:
        if n == 1:
            _log_fallback(seq, strategy, "last token")
            vector = t[-1].copy()
        else:
            vector = t[:-1].mean(axis=0)
    elif strategy is PoolingStrategy.WEIGHTED_MEAN:
        vector = _positional_weighted_mean(t)
    elif strategy is PoolingStrategy.WEIGHTED_MEAN_WITHOUT_LAST:
        if n == 1:
            _log_fallback(seq, strategy, "last token")
            vector = t[-1].copy()
        else:
            vector = _positional_weighted_mean(t[:-1])
    elif strategy is PoolingStrategy.MEAN_LAST_4:
        if n < 4:
            _log_fallback(seq, strategy, "mean over all tokens")
            vector = t.mean(axis=0)
        else:
            vector = t[-4:].mean(axis=0)
    else:  # pragma: no cover - exhaustive over the enum
        raise ValueError(f"unhandled strategy {strategy}")

    return PooledEmbedding(vector=vector, dim=seq.dim, strategy=strategy, model_id=seq.model_id)


def _positional_weighted_mean(t: np.ndarray) -> np.ndarray:
    # Weight i for the i-th token (1-based): sum(i * t_i) / sum(i).
    weights = np.arange(1, len(t) + 1, dtype=np.float64)
    return (weights[:, None] * t).sum(axis=0) / weights.sum()


def _log_fallback(seq: TokenEmbeddingSequence, strategy: PoolingStrategy, used: str) -> None:
    logger.debug(
        "pooling fallback: %s on %d-token sequence (model %s) used %s",
        strategy.value, len(seq.tokens), seq.model_id, used,
    )


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding.

    Componentwise-equal vectors return exactly 1.0 so that identical
    embeddings always score a distance of exactly zero.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    norm_u = float(np.linalg.norm(u))
    norm_v = float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    if np.array_equal(u, v):
        return 1.0
    value = float(np.dot(u, v)) / (norm_u * norm_v)
    return max(-1.0, min(1.0, value))


def semdist(
    reference: str,
    hypothesis: str,
    embedder: Embedder,
    strategy: PoolingStrategy,
) -> float:
    """1 - cosine(pooled reference embedding, pooled hypothesis embedding).

    In [0, 2]; 0 means the pooled embeddings are identical.
    """
    if not reference or not hypothesis:
        raise ValueError("reference and hypothesis must be non-empty")
    ref_pooled = pool(embedder(reference), strategy)
    hyp_pooled = pool(embedder(hypothesis), strategy)
    return 1.0 - cosine(ref_pooled.vector, hyp_pooled.vector)
