"""Aggregate scores, verdicts, and labels into report-ready statistics.

Agreement rows answer one question per metric and subset: on what fraction
of items with a human majority did the metric pick the same hypothesis?
Items without a majority and items whose metric run failed are excluded from
the denominator and reported as separate counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .classify import ClassRecord, QualityLabel
from .corpus import AgreementSubset, Corpus, GoldPreference, gold_preference, subset
from .judge import JudgeRecord
from .semantic import Embedder, PoolingStrategy, semdist


class AnalysisError(Exception):
    pass


class Preference(Enum):
    A = "A"
    B = "B"
    EQUAL = "equal"


@dataclass(frozen=True)
class PreferenceFailure:
    """Recorded reason an item has no usable preference (kept out of denominators)."""

    reason: str


@dataclass(frozen=True)
class AgreementRow:
    metric_name: str
    subset: AgreementSubset
    n_items: int
    agree_pct: float
    equal_pct: float
    disagree_pct: float
    n_no_majority: int
    n_failed: int

    @property
    def is_empty(self) -> bool:
        return self.n_items == 0


@dataclass(frozen=True)
class BoxplotStats:
    label: QualityLabel
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float


def metric_preference(score_a: float, score_b: float, polarity: str = "lower_better") -> Preference:
    """Which hypothesis a metric prefers; exact score equality means EQUAL.

    No epsilon: rational-valued metrics produce meaningful exact ties, and
    an epsilon would manufacture ties for continuous metrics.
    """
    if math.isnan(score_a) or math.isnan(score_b):
        raise AnalysisError("NaN score")
    if polarity not in ("lower_better", "higher_better"):
        raise AnalysisError(f"unknown polarity '{polarity}'")
    if score_a == score_b:
        return Preference.EQUAL
    a_wins = score_a < score_b if polarity == "lower_better" else score_a > score_b
    return Preference.A if a_wins else Preference.B


def agreement_table(
    corpus: Corpus,
    preferences: Mapping[str, Preference | PreferenceFailure],
    which: AgreementSubset,
    metric_name: str = "",
) -> AgreementRow:
    """Score a metric's preferences against the human majority on one subset.

    Every subset item must appear in ``preferences`` (as a Preference or a
    recorded PreferenceFailure); a missing item is an analysis error.
    """
    items = subset(corpus, which).items
    n_agree = n_equal = n_disagree = n_no_majority = n_failed = 0
    for item in items:
        if item.id not in preferences:
            raise AnalysisError(f"no preference recorded for in-subset item '{item.id}'")
        pref = preferences[item.id]
        gold = gold_preference(item)
        if gold is GoldPreference.NO_MAJORITY:
            n_no_majority += 1
            continue
        if isinstance(pref, PreferenceFailure):
            n_failed += 1
            continue
        if pref.value == gold.value:
            n_agree += 1
        elif pref is Preference.EQUAL:
            n_equal += 1
        else:
            n_disagree += 1

    n = n_agree + n_equal + n_disagree
    if n == 0:
        return AgreementRow(metric_name, which, 0, 0.0, 0.0, 0.0, n_no_majority, n_failed)
    agree_pct = 100.0 * n_agree / n
    equal_pct = 100.0 * n_equal / n
    return AgreementRow(
        metric_name=metric_name,
        subset=which,
        n_items=n,
        agree_pct=agree_pct,
        equal_pct=equal_pct,
        disagree_pct=100.0 - agree_pct - equal_pct,
        n_no_majority=n_no_majority,
        n_failed=n_failed,
    )


def verdict_preferences(
    records: Sequence[JudgeRecord],
) -> dict[str, Preference | PreferenceFailure]:
    """Map judge records to per-item preferences in original coordinates.

    Judging never yields EQUAL.  Under both-orders judging the two records
    of an item may disagree; the unswapped (first-order) verdict wins and
    the disagreement shows up in position_consistency, not here.  When only
    one order parsed, that one is used.
    """
    by_item: dict[str, list[JudgeRecord]] = {}
    for record in records:
        by_item.setdefault(record.item_id, []).append(record)

    prefs: dict[str, Preference | PreferenceFailure] = {}
    for item_id, group in by_item.items():
        if len(group) > 2 or (len(group) == 2 and group[0].swapped == group[1].swapped):
            raise AnalysisError(f"duplicate judge records for item '{item_id}'")
        group = sorted(group, key=lambda r: r.swapped)  # unswapped order first
        parsed = [r for r in group if r.verdict is not None]
        if not parsed:
            prefs[item_id] = PreferenceFailure(group[0].error or "judge failed")
        else:
            prefs[item_id] = Preference(parsed[0].verdict.choice)
    return prefs


def undecided_rate(records: Sequence[JudgeRecord]) -> float | None:
    """Fraction of parsed verdicts that were lowercase (undecided)."""
    parsed = [r for r in records if r.verdict is not None]
    if not parsed:
        return None
    return sum(1 for r in parsed if not r.verdict.confident) / len(parsed)


def position_consistency(records: Sequence[JudgeRecord]) -> float | None:
    """Fraction of both-orders item pairs whose un-swapped choices agree.

    None when no item was judged in both orders with both verdicts parsed.
    """
    by_item: dict[str, dict[bool, JudgeRecord]] = {}
    for record in records:
        by_item.setdefault(record.item_id, {})[record.swapped] = record
    pairs = consistent = 0
    for sides in by_item.values():
        if len(sides) != 2:
            continue
        first, second = sides[False], sides[True]
        if first.verdict is None or second.verdict is None:
            continue
        pairs += 1
        if first.verdict.choice == second.verdict.choice:
            consistent += 1
    if pairs == 0:
        return None
    return consistent / pairs


def semdist_preferences(
    corpus: Corpus, embedder: Embedder, strategy: PoolingStrategy
) -> dict[str, Preference | PreferenceFailure]:
    """Per-item semantic-distance preferences (lower distance wins)."""
    prefs: dict[str, Preference | PreferenceFailure] = {}
    for item in corpus.items:
        score_a = semdist(item.reference, item.hyp_a, embedder, strategy)
        score_b = semdist(item.reference, item.hyp_b, embedder, strategy)
        prefs[item.id] = metric_preference(score_a, score_b, "lower_better")
    return prefs


@dataclass(frozen=True)
class PoolingMatrix:
    """Agreement percentages per embedding model and pooling strategy."""

    model_ids: tuple[str, ...]
    strategies: tuple[PoolingStrategy, ...]
    rows: Mapping[str, Mapping[str, AgreementRow]]  # model_id -> strategy value -> row
    subset: AgreementSubset

    def agree_pct(self, model_id: str, strategy: PoolingStrategy) -> float:
        return self.rows[model_id][strategy.value].agree_pct

    def column_means(self) -> dict[str, float]:
        means: dict[str, float] = {}
        for strategy in self.strategies:
            values = [self.agree_pct(m, strategy) for m in self.model_ids]
            means[strategy.value] = sum(values) / len(values)
        return means


def pooling_matrix(
    corpus: Corpus,
    embedders: Mapping[str, Embedder],
    strategies: Sequence[PoolingStrategy],
    which: AgreementSubset = AgreementSubset.EXACTLY_100,
) -> PoolingMatrix:
    """Cross every embedding model with every pooling strategy.

    Each cell scores semantic-distance preferences on the chosen subset
    (annotator consensus by default).
    """
    if not embedders:
        raise AnalysisError("no embedding models given")
    if not strategies:
        raise AnalysisError("no pooling strategies given")
    eval_corpus = subset(corpus, which)
    rows: dict[str, dict[str, AgreementRow]] = {}
    for model_id, embedder in embedders.items():
        row: dict[str, AgreementRow] = {}
        for strategy in strategies:
            prefs = semdist_preferences(eval_corpus, embedder, strategy)
            row[strategy.value] = agreement_table(
                eval_corpus, prefs, which, metric_name=f"semdist {model_id} {strategy.value}"
            )
        rows[model_id] = row
    return PoolingMatrix(
        model_ids=tuple(embedders),
        strategies=tuple(strategies),
        rows=rows,
        subset=which,
    )


def _quantile_type7(sorted_scores: Sequence[float], p: float) -> float:
    # Linear interpolation on order statistics: h = (n - 1) p.
    n = len(sorted_scores)
    h = (n - 1) * p
    lo = math.floor(h)
    frac = h - lo
    if lo + 1 >= n:
        return float(sorted_scores[lo])
    return sorted_scores[lo] + frac * (sorted_scores[lo + 1] - sorted_scores[lo])


def class_distributions(records: Sequence[ClassRecord]) -> list[BoxplotStats]:
    """Five-number summary of semantic distances per predicted label.

    Labels with no successful record are omitted; output is ordered by
    severity.  Quartiles use linear interpolation (type 7).
    """
    by_label: dict[QualityLabel, list[float]] = {}
    for record in records:
        if record.label is not None:
            by_label.setdefault(record.label, []).append(record.semdist)
    if not by_label:
        raise AnalysisError("no successful classification records")

    stats = []
    for label in sorted(by_label, key=lambda l: l.severity):
        scores = sorted(by_label[label])
        stats.append(
            BoxplotStats(
                label=label,
                n=len(scores),
                min=float(scores[0]),
                q1=_quantile_type7(scores, 0.25),
                median=_quantile_type7(scores, 0.50),
                q3=_quantile_type7(scores, 0.75),
                max=float(scores[-1]),
            )
        )
    return stats
