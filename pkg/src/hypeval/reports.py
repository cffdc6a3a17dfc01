"""Report rendering and run manifests.

Renderers are pure functions from analysis outputs to strings so they can be
golden-file tested.  Markdown and CSV round percentages to one decimal place
(round-half-even); the JSON files keep full precision.  Every run directory
gets a manifest recording the config snapshot (secrets are named by their
environment variable, never resolved) and content hashes of the inputs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .analysis import AgreementRow, BoxplotStats, PoolingMatrix
from .classify import ClassRecord
from .corpus import AgreementSubset
from .judge import JudgeRecord

SUBSET_ORDER = (AgreementSubset.EXACTLY_100, AgreementSubset.AT_LEAST_70, AgreementSubset.FULL)
SUBSET_LABELS = {
    AgreementSubset.EXACTLY_100: "=100%",
    AgreementSubset.AT_LEAST_70: ">=70%",
    AgreementSubset.FULL: "Full",
}


def _pct(value: float) -> str:
    return f"{value:.1f}"


def _markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("| :--- " + "| ---: " * (len(header) - 1) + "|")
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def agreement_row_dict(row: AgreementRow) -> dict:
    data = asdict(row)
    data["subset"] = row.subset.value
    return data


# -- metrics (lexical + semdist agreement) --------------------------------


def render_metrics_markdown(rows_by_metric: Mapping[str, Mapping[AgreementSubset, AgreementRow]]) -> str:
    header = ["Metric"]
    for which in SUBSET_ORDER:
        header += [f"{SUBSET_LABELS[which]} Agreement", f"{SUBSET_LABELS[which]} Equal"]
    body = []
    denom_rows = []
    for metric, by_subset in rows_by_metric.items():
        line = [metric]
        for which in SUBSET_ORDER:
            row = by_subset[which]
            line += [_pct(row.agree_pct), _pct(row.equal_pct)]
        body.append(line)
        for which in SUBSET_ORDER:
            row = by_subset[which]
            denom_rows.append(
                [metric, SUBSET_LABELS[which], str(row.n_items),
                 str(row.n_no_majority), str(row.n_failed)]
            )
    parts = [
        "# Metric agreement with human preference",
        "",
        _markdown_table(header, body),
        "",
        "## Denominators",
        "",
        _markdown_table(["Metric", "Subset", "Items", "No majority", "Failed"], denom_rows),
        "",
    ]
    return "\n".join(parts)


def render_metrics_csv(rows_by_metric: Mapping[str, Mapping[AgreementSubset, AgreementRow]]) -> str:
    header = ["metric", "subset", "n_items", "agree_pct", "equal_pct",
              "disagree_pct", "n_no_majority", "n_failed"]
    rows = []
    for metric, by_subset in rows_by_metric.items():
        for which in SUBSET_ORDER:
            row = by_subset[which]
            rows.append([metric, which.value, row.n_items, _pct(row.agree_pct),
                         _pct(row.equal_pct), _pct(row.disagree_pct),
                         row.n_no_majority, row.n_failed])
    return _csv_text(header, rows)


def render_metrics_json(rows_by_metric: Mapping[str, Mapping[AgreementSubset, AgreementRow]]) -> str:
    payload = [
        agreement_row_dict(by_subset[which])
        for _, by_subset in rows_by_metric.items()
        for which in SUBSET_ORDER
    ]
    return _json_text(payload)


# -- judge -----------------------------------------------------------------


def render_judge_markdown(
    rows_by_model: Mapping[str, Mapping[AgreementSubset, AgreementRow]],
    stats_by_model: Mapping[str, dict],
) -> str:
    header = ["LLM"] + [SUBSET_LABELS[which] for which in SUBSET_ORDER]
    body = [
        [model] + [_pct(by_subset[which].agree_pct) for which in SUBSET_ORDER]
        for model, by_subset in rows_by_model.items()
    ]
    appendix_rows = []
    for model, stats in stats_by_model.items():
        undecided = stats.get("undecided_rate")
        bias = stats.get("position_consistency")
        appendix_rows.append(
            [
                model,
                "n/a" if undecided is None else _pct(100.0 * undecided),
                "n/a" if bias is None else _pct(100.0 * bias),
                str(stats.get("n_failed", 0)),
            ]
        )
    parts = [
        "# Judge agreement with human preference",
        "",
        _markdown_table(header, body),
        "",
        "## Decision quality",
        "",
        _markdown_table(
            ["LLM", "Undecided %", "Position consistency %", "Failed items"], appendix_rows
        ),
        "",
    ]
    return "\n".join(parts)


def render_judge_csv(rows_by_model: Mapping[str, Mapping[AgreementSubset, AgreementRow]]) -> str:
    header = ["model", "subset", "n_items", "agree_pct", "equal_pct",
              "disagree_pct", "n_no_majority", "n_failed"]
    rows = []
    for model, by_subset in rows_by_model.items():
        for which in SUBSET_ORDER:
            row = by_subset[which]
            rows.append([model, which.value, row.n_items, _pct(row.agree_pct),
                         _pct(row.equal_pct), _pct(row.disagree_pct),
                         row.n_no_majority, row.n_failed])
    return _csv_text(header, rows)


def render_judge_json(
    rows_by_model: Mapping[str, Mapping[AgreementSubset, AgreementRow]],
    stats_by_model: Mapping[str, dict],
) -> str:
    payload = {
        "agreement": [
            agreement_row_dict(by_subset[which])
            for _, by_subset in rows_by_model.items()
            for which in SUBSET_ORDER
        ],
        "stats": {model: stats for model, stats in stats_by_model.items()},
    }
    return _json_text(payload)


def judge_record_dict(record: JudgeRecord) -> dict:
    return {
        "item_id": record.item_id,
        "model_id": record.model_id,
        "swapped": record.swapped,
        "choice": None if record.verdict is None else record.verdict.choice,
        "confident": None if record.verdict is None else record.verdict.confident,
        "error": record.error,
        "raw_response": record.raw_response,
    }


# -- pooling ----------------------------------------------------------------


def render_pooling_markdown(matrix: PoolingMatrix) -> str:
    strategy_names = [s.value for s in matrix.strategies]
    header = ["Model"] + strategy_names
    body = []
    for model_id in matrix.model_ids:
        body.append([model_id] + [_pct(matrix.agree_pct(model_id, s)) for s in matrix.strategies])
    means = matrix.column_means()
    body.append(["Mean"] + [_pct(means[name]) for name in strategy_names])
    parts = [
        f"# SemDist agreement by model and pooling strategy ({SUBSET_LABELS[matrix.subset]} subset)",
        "",
        _markdown_table(header, body),
        "",
    ]
    return "\n".join(parts)


def render_pooling_csv(matrix: PoolingMatrix) -> str:
    strategy_names = [s.value for s in matrix.strategies]
    rows = []
    for model_id in matrix.model_ids:
        rows.append([model_id] + [_pct(matrix.agree_pct(model_id, s)) for s in matrix.strategies])
    means = matrix.column_means()
    rows.append(["mean"] + [_pct(means[name]) for name in strategy_names])
    return _csv_text(["model"] + strategy_names, rows)


def render_pooling_json(matrix: PoolingMatrix) -> str:
    payload = {
        "subset": matrix.subset.value,
        "strategies": [s.value for s in matrix.strategies],
        "rows": [
            {
                "model_id": model_id,
                "cells": {
                    s.value: agreement_row_dict(matrix.rows[model_id][s.value])
                    for s in matrix.strategies
                },
            }
            for model_id in matrix.model_ids
        ],
        "column_means": matrix.column_means(),
    }
    return _json_text(payload)


# -- classification ----------------------------------------------------------


def class_record_dict(record: ClassRecord) -> dict:
    return {
        "item_id": record.item_id,
        "side": record.side,
        "label": None if record.label is None else record.label.value,
        "error": record.error,
        "semdist": record.semdist,
        "equality_mismatch": record.equality_mismatch,
        "raw_response": record.raw_response,
    }


def render_class_stats_json(stats: Sequence[BoxplotStats], records: Sequence[ClassRecord]) -> str:
    payload = {
        "distributions": [
            {
                "label": s.label.value,
                "n": s.n,
                "min": s.min,
                "q1": s.q1,
                "median": s.median,
                "q3": s.q3,
                "max": s.max,
            }
            for s in stats
        ],
        "n_records": len(records),
        "n_failed": sum(1 for r in records if r.label is None),
        "n_equality_mismatch": sum(1 for r in records if r.equality_mismatch),
    }
    return _json_text(payload)


def render_class_markdown(stats: Sequence[BoxplotStats], records: Sequence[ClassRecord]) -> str:
    header = ["Label", "n", "Min", "Q1", "Median", "Q3", "Max"]
    body = [
        [s.label.value, str(s.n)] + [f"{v:.4f}" for v in (s.min, s.q1, s.median, s.q3, s.max)]
        for s in stats
    ]
    n_failed = sum(1 for r in records if r.label is None)
    n_mismatch = sum(1 for r in records if r.equality_mismatch)
    parts = [
        "# Semantic distance by predicted quality label",
        "",
        _markdown_table(header, body),
        "",
        f"Records: {len(records)} | Unlabeled (parse failures): {n_failed} "
        f"| Exact-match hypotheses with non-identical label: {n_mismatch}",
        "",
    ]
    return "\n".join(parts)


# -- JSONL + manifest ---------------------------------------------------------


def write_jsonl(path: Path, records: Sequence[dict]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(command: str, config, started_utc: str) -> dict:
    """Snapshot of everything needed to repeat a run (stub mode repeats byte-identically)."""

    def maybe_hash(path: Path | None) -> str | None:
        return sha256_file(path) if path is not None and path.exists() else None

    return {
        "toolkit": "hypeval",
        "version": __version__,
        "command": command,
        "started_utc": started_utc,
        "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": {
            "corpus": str(config.corpus_path),
            "out": str(config.out_dir),
            "cache_dir": None if config.cache_dir is None else str(config.cache_dir),
            "stub": None if config.stub_path is None else str(config.stub_path),
            "concurrency": config.concurrency,
            "subset": None if config.subset is None else config.subset.value,
            "normalization": asdict(config.normalization),
            "metrics": [m.name for m in config.metrics],
            "judge_models": list(config.judge_models),
            "embedding_models": list(config.embedding_models),
            "strategies": [s.value for s in config.strategies],
            "classifier_model": config.classifier_model,
            "classifier_semdist_model": config.classifier_semdist_model,
            "classifier_semdist_strategy": config.classifier_semdist_strategy.value,
            "swap_policy": config.swap_policy,
        },
        "models": {
            model_id: {
                "endpoint_url": m.endpoint_url,
                "api_key_env": m.api_key_env,
                "temperature": m.temperature,
                "max_tokens": m.max_tokens,
                "stub": config.stub_path is not None,
            }
            for model_id, m in sorted(config.models.items())
        },
        "inputs": {
            "corpus_sha256": maybe_hash(config.corpus_path),
            "stub_sha256": maybe_hash(config.stub_path),
            "judge_template_sha256": maybe_hash(config.judge_template),
            "classify_template_sha256": maybe_hash(config.classify_template),
        },
    }


def write_manifest(out_dir: Path, manifest: dict) -> None:
    (out_dir / "manifest.json").write_text(_json_text(manifest), encoding="utf-8")
