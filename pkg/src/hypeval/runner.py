"""Pipeline orchestration behind the CLI subcommands.

Each command loads the corpus, drives the model client (live or stub),
aggregates with the analysis module, and writes a report directory:
rendered Markdown/CSV/JSON plus raw per-item records and a manifest.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

from . import analysis, reports
from .classify import classify_corpus
from .config import ConfigError, MetricSpec, RunConfig, validate_run_config
from .corpus import AgreementSubset, Corpus, load_corpus
from .judge import judge_corpus
from .lexical import cer, wer
from .llm import LlmClient, ModelConfig, load_stub_fixtures, write_embedding_file
from .llm import TokenEmbeddingSequence
from .semantic import Embedder, semdist


def _load_run_corpus(config: RunConfig) -> Corpus:
    path = config.corpus_path
    fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    return load_corpus(path, fmt)


def _make_client(config: RunConfig) -> LlmClient:
    stub = load_stub_fixtures(config.stub_path) if config.stub_path is not None else None
    return LlmClient(
        cache_dir=config.cache_dir,
        stub_fixtures=stub,
        concurrency=config.concurrency,
    )


def _prepare(config: RunConfig, command: str) -> tuple[Corpus, LlmClient, Path, str]:
    validate_run_config(config)
    corpus = _load_run_corpus(config)
    client = _make_client(config)
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return corpus, client, out_dir, started


def _read_template(path: Path | None) -> str | None:
    return None if path is None else path.read_text(encoding="utf-8")


def _metric_preferences(
    corpus: Corpus, spec: MetricSpec, config: RunConfig, client: LlmClient
) -> dict:
    if spec.kind == "wer":
        scorer = lambda ref, hyp: wer(ref, hyp, config.normalization)
    elif spec.kind == "cer":
        scorer = lambda ref, hyp: cer(ref, hyp, config.normalization)
    elif spec.kind == "semdist":
        embedder = client.embedder(config.model(spec.model_id))
        scorer = lambda ref, hyp: semdist(ref, hyp, embedder, spec.strategy)
    else:
        raise ConfigError(f"unknown metric kind '{spec.kind}'")
    prefs = {}
    for item in corpus.items:
        prefs[item.id] = analysis.metric_preference(
            scorer(item.reference, item.hyp_a),
            scorer(item.reference, item.hyp_b),
            "lower_better",
        )
    return prefs


def cmd_metrics(config: RunConfig) -> Path:
    """Agreement of each configured metric with human preference, all subsets."""
    corpus, client, out_dir, started = _prepare(config, "metrics")
    if not config.metrics:
        raise ConfigError("no metrics configured")

    rows_by_metric = {}
    for spec in config.metrics:
        prefs = _metric_preferences(corpus, spec, config, client)
        rows_by_metric[spec.name] = {
            which: analysis.agreement_table(corpus, prefs, which, spec.name)
            for which in reports.SUBSET_ORDER
        }

    (out_dir / "metrics.md").write_text(
        reports.render_metrics_markdown(rows_by_metric), encoding="utf-8"
    )
    (out_dir / "metrics.csv").write_text(
        reports.render_metrics_csv(rows_by_metric), encoding="utf-8"
    )
    (out_dir / "metrics.json").write_text(
        reports.render_metrics_json(rows_by_metric), encoding="utf-8"
    )
    reports.write_manifest(out_dir, reports.build_manifest("metrics", config, started))
    return out_dir


def cmd_judge(config: RunConfig) -> Path:
    """Judge every item with every configured judge model; Table-2-shaped report."""
    corpus, client, out_dir, started = _prepare(config, "judge")
    if not config.judge_models:
        raise ConfigError("no judge models configured (judge_models or --model)")
    template = _read_template(config.judge_template)

    all_records = []
    rows_by_model = {}
    stats_by_model = {}
    for model_id in config.judge_models:
        model = config.model(model_id)
        records = judge_corpus(client, corpus, model, config.swap_policy, template)
        all_records.extend(records)
        prefs = analysis.verdict_preferences(records)
        rows_by_model[model_id] = {
            which: analysis.agreement_table(corpus, prefs, which, f"judge {model_id}")
            for which in reports.SUBSET_ORDER
        }
        undecided = analysis.undecided_rate(records)
        consistency = analysis.position_consistency(records)
        stats_by_model[model_id] = {
            "undecided_rate": undecided,
            "position_consistency": consistency,
            "n_failed": sum(1 for r in records if r.verdict is None),
        }

    reports.write_jsonl(
        out_dir / "judge_records.jsonl",
        [reports.judge_record_dict(r) for r in sorted(
            all_records, key=lambda r: (r.model_id, r.item_id, r.swapped))],
    )
    (out_dir / "judge.md").write_text(
        reports.render_judge_markdown(rows_by_model, stats_by_model), encoding="utf-8"
    )
    (out_dir / "judge.csv").write_text(
        reports.render_judge_csv(rows_by_model), encoding="utf-8"
    )
    (out_dir / "judge.json").write_text(
        reports.render_judge_json(rows_by_model, stats_by_model), encoding="utf-8"
    )
    reports.write_manifest(out_dir, reports.build_manifest("judge", config, started))
    return out_dir


def cmd_pooling(config: RunConfig) -> Path:
    """Embedding-model x pooling-strategy agreement matrix."""
    corpus, client, out_dir, started = _prepare(config, "pooling")
    if not config.embedding_models:
        raise ConfigError("no embedding models configured (embedding_models or --model)")
    which = config.subset if config.subset is not None else AgreementSubset.EXACTLY_100

    embedders: dict[str, Embedder] = {
        model_id: client.embedder(config.model(model_id))
        for model_id in config.embedding_models
    }
    matrix = analysis.pooling_matrix(corpus, embedders, config.strategies, which)

    (out_dir / "pooling.md").write_text(reports.render_pooling_markdown(matrix), encoding="utf-8")
    (out_dir / "pooling.csv").write_text(reports.render_pooling_csv(matrix), encoding="utf-8")
    (out_dir / "pooling.json").write_text(reports.render_pooling_json(matrix), encoding="utf-8")
    reports.write_manifest(out_dir, reports.build_manifest("pooling", config, started))
    return out_dir


def cmd_classify(config: RunConfig) -> Path:
    """Four-class quality labels with companion semantic distances."""
    corpus, client, out_dir, started = _prepare(config, "classify")
    if config.classifier_model is None:
        raise ConfigError("no classifier model configured (classifier.model or --model)")
    if config.classifier_semdist_model is None:
        raise ConfigError("classifier runs need a semdist companion model (classifier.semdist.model)")
    if config.subset is not None:
        from .corpus import subset as corpus_subset

        corpus = corpus_subset(corpus, config.subset)

    model = config.model(config.classifier_model)
    embedder = client.embedder(config.model(config.classifier_semdist_model))
    records = classify_corpus(
        client, corpus, model, embedder, config.classifier_semdist_strategy,
        _read_template(config.classify_template),
    )
    stats = analysis.class_distributions(records)

    reports.write_jsonl(
        out_dir / "class_records.jsonl", [reports.class_record_dict(r) for r in records]
    )
    (out_dir / "class_stats.json").write_text(
        reports.render_class_stats_json(stats, records), encoding="utf-8"
    )
    (out_dir / "classify.md").write_text(
        reports.render_class_markdown(stats, records), encoding="utf-8"
    )
    reports.write_manifest(out_dir, reports.build_manifest("classify", config, started))
    return out_dir


def cmd_export_cache(config: RunConfig) -> Path:
    """Dump the response cache as stub fixtures plus embedding files."""
    if config.cache_dir is None:
        raise ConfigError("export-cache needs --cache-dir")
    if config.out_dir is None:
        raise ConfigError("export-cache needs --out")
    client = LlmClient(cache_dir=config.cache_dir)
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    entries = list(client.iter_cache_entries())
    reports.write_jsonl(out_dir / "stub_fixtures.jsonl", entries)

    by_model: dict[str, dict[str, TokenEmbeddingSequence]] = {}
    for entry in entries:
        if entry["kind"] != "embed":
            continue
        text = entry["request"]["input"]
        seq = TokenEmbeddingSequence.from_lists(
            entry["model_id"], entry["response"]["tokens"], entry["response"]["vectors"]
        )
        by_model.setdefault(entry["model_id"], {})[text] = seq
    for model_id, texts in sorted(by_model.items()):
        write_embedding_file(out_dir / f"embeddings_{model_id}.jsonl", texts)
    return out_dir
