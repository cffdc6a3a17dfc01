"""Absolute quality labels for single (reference, hypothesis) pairs.

Each hypothesis is labeled on its own, without seeing the competing one:
identical, useful, bad, or incomprehensible, in increasing severity.  Every
record also carries a semantic-distance score against the reference so label
quality can be checked against a continuous signal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .corpus import Corpus, EvalItem
from .judge import parse_template
from .llm import ChatMessage, LlmClient, LlmError, ModelConfig
from .semantic import Embedder, PoolingStrategy, semdist


class LabelParseError(Exception):
    """No label word anywhere in the response."""


class QualityLabel(Enum):
    """Four-class hypothesis quality, ordered by severity."""

    IDENTICAL = "identical"
    USEFUL = "useful"
    BAD = "bad"
    INCOMPREHENSIBLE = "incomprehensible"

    @property
    def severity(self) -> int:
        return _SEVERITY[self]


_SEVERITY = {
    QualityLabel.IDENTICAL: 0,
    QualityLabel.USEFUL: 1,
    QualityLabel.BAD: 2,
    QualityLabel.INCOMPREHENSIBLE: 3,
}

_LABEL_RE = re.compile(
    r"\b(identical|useful|bad|incomprehensible)\b", re.IGNORECASE
)


@dataclass(frozen=True)
class ClassRecord:
    item_id: str
    side: str  # "A" or "B"
    label: QualityLabel | None
    error: str | None
    semdist: float
    raw_response: str
    # True when the hypothesis string-equals the reference but the model
    # labeled it something other than identical; kept for audits, the label
    # itself is never post-corrected.
    equality_mismatch: bool


def load_default_template() -> str:
    return (
        resources.files("hypeval").joinpath("templates/classify_prompt.txt").read_text("utf-8")
    )


def build_classify_prompt(
    reference: str, hypothesis: str, template_text: str | None = None
) -> list[ChatMessage]:
    """Render the zero-shot classification prompt: one user message."""
    if not reference.strip() or not hypothesis.strip():
        raise ValueError("reference and hypothesis must be non-empty")
    if template_text is None:
        template_text = load_default_template()
    messages = []
    for role, content in parse_template(template_text):
        rendered = content.format(reference=reference, hypothesis=hypothesis)
        messages.append(ChatMessage(role=role, content=rendered))
    return messages


def parse_label(response: str) -> QualityLabel:
    """Case-insensitive match of the last label word in the response."""
    matches = _LABEL_RE.findall(response)
    if not matches:
        raise LabelParseError("no label word in response")
    return QualityLabel(matches[-1].lower())


def classify_pair(
    client: LlmClient,
    item: EvalItem,
    side: str,
    config: ModelConfig,
    embedder: Embedder,
    strategy: PoolingStrategy,
    template_text: str | None = None,
) -> ClassRecord:
    """Label one side of an item; failures are recorded, semdist always computed."""
    hypothesis = item.hyp_a if side == "A" else item.hyp_b
    distance = semdist(item.reference, hypothesis, embedder, strategy)

    raw = ""
    label: QualityLabel | None = None
    error: str | None = None
    try:
        raw = client.chat(build_classify_prompt(item.reference, hypothesis, template_text), config)
        label = parse_label(raw)
    except (LlmError, LabelParseError) as exc:
        error = f"{type(exc).__name__}: {exc}"

    mismatch = (
        hypothesis == item.reference
        and label is not None
        and label is not QualityLabel.IDENTICAL
    )
    return ClassRecord(
        item_id=item.id,
        side=side,
        label=label,
        error=error,
        semdist=distance,
        raw_response=raw,
        equality_mismatch=mismatch,
    )


def classify_corpus(
    client: LlmClient,
    corpus: Corpus,
    config: ModelConfig,
    embedder: Embedder,
    strategy: PoolingStrategy,
    template_text: str | None = None,
) -> list[ClassRecord]:
    """Label both sides of every item: exactly 2 * len(corpus) records,
    sorted by (item id, side)."""
    jobs = [(item, side) for item in corpus.items for side in ("A", "B")]

    def run(job: tuple[EvalItem, str]) -> ClassRecord:
        item, side = job
        return classify_pair(client, item, side, config, embedder, strategy, template_text)

    records = client.map_bounded(run, jobs)
    return sorted(records, key=lambda r: (r.item_id, r.side))
