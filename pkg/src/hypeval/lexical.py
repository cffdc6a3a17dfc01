"""Word and character error rates from a minimum edit-distance alignment."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass


@dataclass(frozen=True)
class NormalizationConfig:
    """Text normalization applied before tokenization.

    The default matches the strictest reading of the metrics: case-sensitive,
    punctuation kept, hyphens kept.  Only whitespace runs are collapsed.
    """

    lowercase: bool = False
    strip_punctuation: bool = False
    collapse_whitespace: bool = True
    split_hyphens: bool = False


@dataclass(frozen=True)
class EditCounts:
    substitutions: int
    insertions: int
    deletions: int
    reference_length: int

    def __post_init__(self) -> None:
        if min(self.substitutions, self.insertions, self.deletions, self.reference_length) < 0:
            raise ValueError("negative edit count")
        if self.substitutions + self.deletions > self.reference_length:
            raise ValueError("substitutions + deletions exceed reference length")

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions


def _normalize(text: str, config: NormalizationConfig) -> str:
    # NFC first: combining accents (common in French sources) must compare
    # equal regardless of how the source file encoded them.
    text = unicodedata.normalize("NFC", text)
    if config.lowercase:
        text = text.lower()
    if config.split_hyphens:
        text = text.replace("-", " ")
    if config.strip_punctuation:
        text = "".join(c for c in text if not unicodedata.category(c).startswith("P"))
    if config.collapse_whitespace:
        text = " ".join(text.split())
    return text


def tokenize(
    text: str, config: NormalizationConfig = NormalizationConfig(), unit: str = "word"
) -> list[str]:
    """Split normalized text into word or character tokens.

    Character mode keeps spaces as tokens, the common convention for CER.
    """
    normalized = _normalize(text, config)
    if unit == "word":
        return normalized.split()
    if unit == "char":
        return list(normalized)
    raise ValueError(f"unknown tokenization unit '{unit}'")


def edit_distance(ref: list[str], hyp: list[str]) -> EditCounts:
    """Minimum-cost alignment counts between token sequences (unit costs).

    Among minimal alignments, substitutions are preferred over
    insertion+deletion pairs, so the (S, I, D) decomposition is unique.
    """
    m, n = len(ref), len(hyp)
    # Cell value: (total cost, insertions + deletions), minimized
    # lexicographically.  I and D are recovered at the end from
    # I - D = n - m, which holds at the final cell.
    prev = [(j, j) for j in range(n + 1)]
    for i in range(1, m + 1):
        cur = [(i, i)] + [(0, 0)] * n
        ref_tok = ref[i - 1]
        for j in range(1, n + 1):
            sub_cost = 0 if ref_tok == hyp[j - 1] else 1
            diag = (prev[j - 1][0] + sub_cost, prev[j - 1][1])
            up = (prev[j][0] + 1, prev[j][1] + 1)
            left = (cur[j - 1][0] + 1, cur[j - 1][1] + 1)
            cur[j] = min(diag, up, left)
        prev = cur
    cost, indel = prev[n]
    insertions = (indel + (n - m)) // 2
    deletions = indel - insertions
    return EditCounts(
        substitutions=cost - indel,
        insertions=insertions,
        deletions=deletions,
        reference_length=m,
    )


def _error_rate(reference: str, hypothesis: str, config: NormalizationConfig, unit: str) -> float:
    ref_tokens = tokenize(reference, config, unit)
    hyp_tokens = tokenize(hypothesis, config, unit)
    if not ref_tokens:
        raise ValueError("reference is empty after normalization")
    counts = edit_distance(ref_tokens, hyp_tokens)
    return counts.total / counts.reference_length


def wer(
    reference: str, hypothesis: str, config: NormalizationConfig = NormalizationConfig()
) -> float:
    """Word error rate: (S + I + D) / reference word count.  May exceed 1.0."""
    return _error_rate(reference, hypothesis, config, "word")


def cer(
    reference: str, hypothesis: str, config: NormalizationConfig = NormalizationConfig()
) -> float:
    """Character error rate: WER over characters, spaces included."""
    return _error_rate(reference, hypothesis, config, "char")
