"""Run configuration: JSON file plus CLI overrides.

Precedence is CLI flag > config file > built-in default.  Relative paths in
a config file resolve against the file's own directory so configs stay
versionable.  Secrets never appear here: model entries name the environment
variable that holds the API key, not the key itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import AgreementSubset
from .lexical import NormalizationConfig
from .llm import ModelConfig
from .semantic import ALL_STRATEGIES, PoolingStrategy, parse_strategy


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class MetricSpec:
    """One metric column of the agreement report."""

    kind: str  # "wer" | "cer" | "semdist"
    model_id: str | None = None
    strategy: PoolingStrategy | None = None

    @property
    def name(self) -> str:
        if self.kind == "semdist":
            return f"semdist {self.model_id} {self.strategy.value}"
        return self.kind


@dataclass
class RunConfig:
    corpus_path: Path | None = None
    out_dir: Path | None = None
    cache_dir: Path | None = None
    stub_path: Path | None = None
    concurrency: int = 4
    subset: AgreementSubset | None = None
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    models: dict[str, ModelConfig] = field(default_factory=dict)
    metrics: list[MetricSpec] = field(default_factory=lambda: [MetricSpec("wer"), MetricSpec("cer")])
    judge_models: list[str] = field(default_factory=list)
    embedding_models: list[str] = field(default_factory=list)
    strategies: list[PoolingStrategy] = field(default_factory=lambda: list(ALL_STRATEGIES))
    classifier_model: str | None = None
    classifier_semdist_model: str | None = None
    classifier_semdist_strategy: PoolingStrategy = PoolingStrategy.MEAN
    judge_template: Path | None = None
    classify_template: Path | None = None
    swap_policy: str = "none"

    def model(self, model_id: str) -> ModelConfig:
        try:
            return self.models[model_id]
        except KeyError:
            raise ConfigError(
                f"model '{model_id}' is not defined in the config 'models' list"
            ) from None


def _parse_model_entry(entry: dict) -> ModelConfig:
    if not isinstance(entry, dict):
        raise ConfigError(f"model entry must be an object, got {type(entry).__name__}")
    known = {
        "model_id", "endpoint_url", "api_key_env", "temperature",
        "max_tokens", "timeout_ms", "max_retries", "backoff_base_ms",
    }
    unknown = set(entry) - known
    if unknown:
        raise ConfigError(f"unknown model config key(s): {', '.join(sorted(unknown))}")
    if "model_id" not in entry:
        raise ConfigError("model entry missing 'model_id'")
    try:
        return ModelConfig(**entry)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model entry for '{entry.get('model_id')}': {exc}") from None


def _parse_metric_entry(entry) -> MetricSpec:
    if isinstance(entry, str):
        if entry not in ("wer", "cer"):
            raise ConfigError(f"unknown metric '{entry}' (semdist needs model and strategy)")
        return MetricSpec(entry)
    if isinstance(entry, dict) and entry.get("kind") == "semdist":
        if "model" not in entry or "strategy" not in entry:
            raise ConfigError("semdist metric entry needs 'model' and 'strategy'")
        try:
            strategy = parse_strategy(entry["strategy"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return MetricSpec("semdist", model_id=entry["model"], strategy=strategy)
    raise ConfigError(f"invalid metric entry: {entry!r}")


def _parse_subset(value: str) -> AgreementSubset:
    try:
        return AgreementSubset(value)
    except ValueError:
        raise ConfigError(f"unknown subset '{value}' (expected full, 70, or 100)") from None


def load_config_file(path: str | Path) -> RunConfig:
    """Parse a JSON config file into a RunConfig."""
    path = Path(path)
    base = path.parent
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be an object")

    def resolve(value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    config = RunConfig()
    known_keys = {
        "corpus", "out", "cache_dir", "stub", "concurrency", "subset",
        "normalization", "models", "metrics", "judge_models", "embedding_models",
        "strategies", "classifier", "judge_template", "classify_template", "swap_policy",
    }
    unknown = set(data) - known_keys
    if unknown:
        raise ConfigError(f"{path}: unknown config key(s): {', '.join(sorted(unknown))}")

    config.corpus_path = resolve(data.get("corpus"))
    config.out_dir = resolve(data.get("out"))
    config.cache_dir = resolve(data.get("cache_dir"))
    config.stub_path = resolve(data.get("stub"))
    if "concurrency" in data:
        config.concurrency = int(data["concurrency"])
    if "subset" in data:
        config.subset = _parse_subset(str(data["subset"]))
    if "normalization" in data:
        norm = data["normalization"]
        if not isinstance(norm, dict):
            raise ConfigError("'normalization' must be an object of boolean flags")
        try:
            config.normalization = NormalizationConfig(**norm)
        except TypeError as exc:
            raise ConfigError(f"invalid normalization flags: {exc}") from None
    for entry in data.get("models", []):
        model = _parse_model_entry(entry)
        if model.model_id in config.models:
            raise ConfigError(f"duplicate model definition '{model.model_id}'")
        config.models[model.model_id] = model
    if "metrics" in data:
        config.metrics = [_parse_metric_entry(e) for e in data["metrics"]]
    config.judge_models = list(data.get("judge_models", []))
    config.embedding_models = list(data.get("embedding_models", []))
    if "strategies" in data:
        try:
            config.strategies = [parse_strategy(s) for s in data["strategies"]]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if "classifier" in data:
        cls = data["classifier"]
        if not isinstance(cls, dict) or "model" not in cls:
            raise ConfigError("'classifier' must be an object with at least 'model'")
        config.classifier_model = cls["model"]
        semdist_spec = cls.get("semdist", {})
        config.classifier_semdist_model = semdist_spec.get("model")
        if "strategy" in semdist_spec:
            try:
                config.classifier_semdist_strategy = parse_strategy(semdist_spec["strategy"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    config.judge_template = resolve(data.get("judge_template"))
    config.classify_template = resolve(data.get("classify_template"))
    if "swap_policy" in data:
        if data["swap_policy"] not in ("none", "both_orders"):
            raise ConfigError(f"unknown swap_policy '{data['swap_policy']}'")
        config.swap_policy = data["swap_policy"]
    return config


def apply_cli_overrides(config: RunConfig, args) -> RunConfig:
    """Overlay parsed argparse flags onto a config (CLI wins)."""
    if getattr(args, "corpus", None):
        config.corpus_path = Path(args.corpus)
    if getattr(args, "out", None):
        config.out_dir = Path(args.out)
    if getattr(args, "cache_dir", None):
        config.cache_dir = Path(args.cache_dir)
    if getattr(args, "stub", None):
        config.stub_path = Path(args.stub)
    if getattr(args, "concurrency", None):
        config.concurrency = args.concurrency
    if getattr(args, "subset", None):
        config.subset = _parse_subset(args.subset)
    if getattr(args, "model", None):
        models = list(args.model)
        command = getattr(args, "command", "")
        if command == "judge":
            config.judge_models = models
        elif command == "pooling":
            config.embedding_models = models
        elif command == "classify":
            config.classifier_model = models[-1]
    if getattr(args, "strategy", None):
        try:
            config.strategies = [parse_strategy(s) for s in args.strategy]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if getattr(args, "swap_policy", None):
        config.swap_policy = args.swap_policy
    return config


def validate_run_config(config: RunConfig) -> None:
    """Checks shared by every command."""
    if config.corpus_path is None:
        raise ConfigError("no corpus given (use --corpus or the 'corpus' config key)")
    if config.out_dir is None:
        raise ConfigError("no output directory given (use --out or the 'out' config key)")
    if config.stub_path is not None and config.cache_dir is not None:
        raise ConfigError("stub mode and live caching are mutually exclusive per run")
    if config.concurrency < 1:
        raise ConfigError("concurrency must be >= 1")
