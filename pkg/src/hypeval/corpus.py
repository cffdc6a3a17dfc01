"""Annotated evaluation corpora: one reference, two hypotheses, human votes.

A corpus item pairs a reference transcription with two competing hypotheses
and the number of annotators who preferred each side.  Vote counts drive the
three evaluation subsets (full / at-least-70% / unanimous annotator
agreement) and the per-item gold preference.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable


class CorpusLoadError(Exception):
    """Raised when a corpus file fails validation; message lists line numbers."""


class GoldPreference(Enum):
    A = "A"
    B = "B"
    NO_MAJORITY = "no_majority"


class AgreementSubset(Enum):
    """Corpus slices by annotator agreement level."""

    FULL = "full"
    AT_LEAST_70 = "70"
    EXACTLY_100 = "100"


FIELD_NAMES = ("id", "reference", "hyp_a", "hyp_b", "votes_a", "votes_b")


@dataclass(frozen=True)
class EvalItem:
    """One reference with two competing hypotheses and annotator vote counts."""

    id: str
    reference: str
    hyp_a: str
    hyp_b: str
    votes_a: int
    votes_b: int

    def __post_init__(self) -> None:
        if not self.id.strip():
            raise ValueError("empty id")
        for name in ("reference", "hyp_a", "hyp_b"):
            if not getattr(self, name).strip():
                raise ValueError(f"empty text in field '{name}'")
        if self.votes_a < 0 or self.votes_b < 0:
            raise ValueError("negative vote count")
        if self.votes_a + self.votes_b < 1:
            raise ValueError("no votes")


@dataclass(frozen=True)
class Corpus:
    """Immutable, ordered collection of EvalItems."""

    items: tuple[EvalItem, ...]
    name: str
    source_path: str

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def annotator_agreement(votes_a: int, votes_b: int) -> float:
    """Fraction of annotators on the majority side: max(A, B) / (A + B).

    Always in [0.5, 1.0] for a positive total; 0.5 is a perfect tie.
    """
    total = votes_a + votes_b
    if total < 1:
        raise ValueError("no votes: votes_a + votes_b must be >= 1")
    return max(votes_a, votes_b) / total


def _in_subset(item: EvalItem, which: AgreementSubset) -> bool:
    # Integer comparisons keep thresholds exact (7/10 >= 0.7 without float slop).
    top = max(item.votes_a, item.votes_b)
    total = item.votes_a + item.votes_b
    if which is AgreementSubset.FULL:
        return True
    if which is AgreementSubset.AT_LEAST_70:
        return 10 * top >= 7 * total
    return top == total


def subset(corpus: Corpus, which: AgreementSubset) -> Corpus:
    """Filter a corpus by annotator agreement level, preserving item order."""
    if which is AgreementSubset.FULL:
        return corpus
    kept = tuple(item for item in corpus.items if _in_subset(item, which))
    return Corpus(items=kept, name=corpus.name, source_path=corpus.source_path)


def gold_preference(item: EvalItem) -> GoldPreference:
    """Hypothesis preferred by the annotator majority, or NO_MAJORITY on a tie."""
    if item.votes_a > item.votes_b:
        return GoldPreference.A
    if item.votes_b > item.votes_a:
        return GoldPreference.B
    return GoldPreference.NO_MAJORITY


def _coerce_votes(value: object, field: str) -> int:
    # JSON true/false would pass isinstance(int) checks; reject explicitly.
    if isinstance(value, bool):
        raise ValueError(f"non-numeric {field}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            raise ValueError(f"non-numeric {field}") from None
    raise ValueError(f"non-numeric {field}")


def _build_item(record: dict, line_no: int, errors: list[str]) -> EvalItem | None:
    missing = [f for f in FIELD_NAMES if f not in record or record[f] is None]
    if missing:
        errors.append(f"line {line_no}: missing field(s) {', '.join(missing)}")
        return None
    try:
        votes_a = _coerce_votes(record["votes_a"], "votes_a")
        votes_b = _coerce_votes(record["votes_b"], "votes_b")
        return EvalItem(
            id=str(record["id"]),
            reference=str(record["reference"]),
            hyp_a=str(record["hyp_a"]),
            hyp_b=str(record["hyp_b"]),
            votes_a=votes_a,
            votes_b=votes_b,
        )
    except ValueError as exc:
        errors.append(f"line {line_no}: {exc}")
        return None


def _read_jsonl_records(text: str) -> Iterable[tuple[int, dict | None, str | None]]:
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            yield line_no, None, f"invalid JSON ({exc.msg})"
            continue
        if not isinstance(record, dict):
            yield line_no, None, "record is not an object"
            continue
        yield line_no, record, None


def _read_csv_records(text: str) -> Iterable[tuple[int, dict | None, str | None]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return
    unknown = [f for f in FIELD_NAMES if f not in reader.fieldnames]
    if unknown:
        yield 1, None, f"header missing column(s) {', '.join(unknown)}"
        return
    for record in reader:
        # reader.line_num is the physical line of the row just consumed,
        # correct even when quoted fields span lines.
        yield reader.line_num, record, None


def load_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Load and validate a corpus file.

    Every record must carry the six item fields; violations are collected
    with their line numbers and any error aborts the load.
    """
    path = Path(path)
    if format not in ("jsonl", "csv"):
        raise ValueError(f"unknown corpus format '{format}'")
    text = path.read_text(encoding="utf-8")
    records = _read_jsonl_records(text) if format == "jsonl" else _read_csv_records(text)

    errors: list[str] = []
    items: list[EvalItem] = []
    seen_ids: dict[str, int] = {}
    for line_no, record, parse_error in records:
        if parse_error is not None:
            errors.append(f"line {line_no}: {parse_error}")
            continue
        item = _build_item(record, line_no, errors)
        if item is None:
            continue
        if item.id in seen_ids:
            errors.append(
                f"line {line_no}: duplicate id '{item.id}' (first seen at line {seen_ids[item.id]})"
            )
            continue
        seen_ids[item.id] = line_no
        items.append(item)

    if errors:
        raise CorpusLoadError(
            f"{path}: {len(errors)} invalid record(s):\n" + "\n".join(errors)
        )
    return Corpus(items=tuple(items), name=path.stem, source_path=str(path))


def write_corpus(corpus: Corpus, path: str | Path, format: str = "jsonl") -> None:
    """Write a corpus back to disk in either supported format."""
    path = Path(path)
    if format == "jsonl":
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for item in corpus.items:
                record = {f: getattr(item, f) for f in FIELD_NAMES}
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    elif format == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(FIELD_NAMES))
            writer.writeheader()
            for item in corpus.items:
                writer.writerow({f: getattr(item, f) for f in FIELD_NAMES})
    else:
        raise ValueError(f"unknown corpus format '{format}'")
