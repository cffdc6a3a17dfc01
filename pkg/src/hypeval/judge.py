"""Pairwise hypothesis selection by a generative model.

The judge sees the reference and both hypotheses in a one-shot prompt (a
worked example plus the target triple), reasons freely, and must end with a
single letter: 'A' or 'B', lowercase if undecided.  The parser extracts that
final letter; records keep the raw response verbatim for audit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .corpus import Corpus, EvalItem
from .llm import ChatMessage, LlmClient, LlmError, ModelConfig


class VerdictParseError(Exception):
    """No qualifying verdict letter anywhere in the response."""


class TemplateError(Exception):
    """Prompt template file is malformed."""


@dataclass(frozen=True)
class Verdict:
    choice: str  # "A" or "B", in the coordinates of the presented prompt
    confident: bool  # uppercase letter means confident, lowercase undecided


@dataclass(frozen=True)
class JudgeRecord:
    """Outcome of judging one item, always in original item coordinates."""

    item_id: str
    model_id: str
    swapped: bool
    verdict: Verdict | None
    error: str | None
    raw_response: str


# A verdict letter is a standalone A/B/a/b: no letter on either side.
# [^\W\d_] matches exactly the Unicode letters, so digits and punctuation
# delimit (accented letters in the surrounding prose do not).
_VERDICT_RE = re.compile(r"(?<![^\W\d_])[ABab](?![^\W\d_])")


def load_default_template() -> str:
    return (
        resources.files("hypeval").joinpath("templates/judge_prompt.txt").read_text("utf-8")
    )


def parse_template(template_text: str) -> list[tuple[str, str]]:
    """Split a prompt template into (role, content) sections.

    Sections start at lines containing only [user], [assistant], or [system].
    """
    sections: list[tuple[str, list[str]]] = []
    for line in template_text.splitlines():
        marker = line.strip()
        if marker in ("[user]", "[assistant]", "[system]"):
            sections.append((marker[1:-1], []))
            continue
        if not sections:
            raise TemplateError("template content before the first role marker")
        sections[-1][1].append(line)
    if not sections:
        raise TemplateError("template has no role markers")
    return [(role, "\n".join(lines).strip("\n")) for role, lines in sections]


def build_judge_prompt(
    reference: str,
    hyp_a: str,
    hyp_b: str,
    template_text: str | None = None,
) -> list[ChatMessage]:
    """Render the one-shot judge prompt for a target triple.

    The worked example in the template is emitted byte-identically on every
    call; only the final user turn carries the substituted target texts.
    """
    for name, value in (("reference", reference), ("hyp_a", hyp_a), ("hyp_b", hyp_b)):
        if not value.strip():
            raise ValueError(f"empty {name}")
    if template_text is None:
        template_text = load_default_template()
    messages = []
    for role, content in parse_template(template_text):
        rendered = content.format(reference=reference, hyp_a=hyp_a, hyp_b=hyp_b)
        messages.append(ChatMessage(role=role, content=rendered))
    return messages


def parse_verdict(response: str) -> Verdict:
    """Extract the final standalone A/B letter; lowercase means undecided.

    Explicit "hypothesis A"/"hypothesis B" endings match through their
    trailing letter.  Raises VerdictParseError when no letter qualifies.
    """
    matches = _VERDICT_RE.findall(response)
    if not matches:
        raise VerdictParseError("no standalone verdict letter in response")
    letter = matches[-1]
    return Verdict(choice=letter.upper(), confident=letter.isupper())


def _unswap(verdict: Verdict, swapped: bool) -> Verdict:
    if not swapped:
        return verdict
    flipped = "B" if verdict.choice == "A" else "A"
    return Verdict(choice=flipped, confident=verdict.confident)


def judge_item(
    client: LlmClient,
    item: EvalItem,
    config: ModelConfig,
    swap: bool = False,
    template_text: str | None = None,
) -> JudgeRecord:
    """Judge one item; transport and parse errors are recorded, not raised.

    With ``swap`` the hypotheses are presented in exchanged order and the
    parsed choice is mapped back, so the record is always in original item
    coordinates.  A parse failure triggers one cache-bypassing retry.
    """
    hyp_a, hyp_b = (item.hyp_b, item.hyp_a) if swap else (item.hyp_a, item.hyp_b)
    messages = build_judge_prompt(item.reference, hyp_a, hyp_b, template_text)

    raw = ""
    try:
        raw = client.chat(messages, config)
        try:
            verdict = parse_verdict(raw)
        except VerdictParseError:
            # Temperature-0 servers occasionally truncate; one fresh attempt.
            raw = client.chat(messages, config, refresh=True)
            verdict = parse_verdict(raw)
    except (LlmError, VerdictParseError) as exc:
        return JudgeRecord(
            item_id=item.id,
            model_id=config.model_id,
            swapped=swap,
            verdict=None,
            error=f"{type(exc).__name__}: {exc}",
            raw_response=raw,
        )
    return JudgeRecord(
        item_id=item.id,
        model_id=config.model_id,
        swapped=swap,
        verdict=_unswap(verdict, swap),
        error=None,
        raw_response=raw,
    )


def judge_corpus(
    client: LlmClient,
    corpus: Corpus,
    config: ModelConfig,
    swap_policy: str = "none",
    template_text: str | None = None,
) -> list[JudgeRecord]:
    """Judge every item; one record per item, two under ``both_orders``.

    Per-item failures are recorded inline, the batch always completes.
    Output is sorted by (item id, swapped) regardless of completion order.
    """
    if swap_policy not in ("none", "both_orders"):
        raise ValueError(f"unknown swap_policy '{swap_policy}'")
    jobs: list[tuple[EvalItem, bool]] = [(item, False) for item in corpus.items]
    if swap_policy == "both_orders":
        jobs.extend((item, True) for item in corpus.items)

    def run(job: tuple[EvalItem, bool]) -> JudgeRecord:
        item, swap = job
        return judge_item(client, item, config, swap=swap, template_text=template_text)

    records = client.map_bounded(run, jobs)
    return sorted(records, key=lambda r: (r.item_id, r.swapped))
