"""Command-line entry point.

Subcommands: metrics, judge, pooling, classify, export-cache.
Exit codes: 0 success, 1 configuration error, 2 data error, 3 transport error.
"""

from __future__ import annotations

import argparse
import sys

from . import runner
from .config import ConfigError, RunConfig, apply_cli_overrides, load_config_file
from .corpus import CorpusLoadError
from .llm import EmbeddingFileError, ModelConfigError, ProtocolError, StubMissError, TransportError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_TRANSPORT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypeval",
        description="Score ASR transcription hypotheses against human preference annotations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; CLI flags override its values")
        p.add_argument("--corpus", help="corpus file (.jsonl or .csv)")
        p.add_argument("--subset", choices=["full", "70", "100"],
                       help="restrict pooling/classify to one agreement subset")
        p.add_argument("--stub", help="stub fixture file; replays recorded responses offline")
        p.add_argument("--cache-dir", dest="cache_dir", help="response cache directory (live mode)")
        p.add_argument("--out", help="output directory for reports")
        p.add_argument("--concurrency", type=int, help="max in-flight model requests")
        p.add_argument("--model", action="append",
                       help="model id (repeatable); overrides the command's model list")
        p.add_argument("--strategy", action="append",
                       help="pooling strategy name (repeatable)")

    p_metrics = sub.add_parser("metrics", help="WER/CER/semdist agreement table")
    add_common(p_metrics)

    p_judge = sub.add_parser("judge", help="pairwise LLM judging agreement table")
    add_common(p_judge)
    p_judge.add_argument("--swap-policy", dest="swap_policy", choices=["none", "both_orders"],
                         help="judge each item once, or in both presentation orders")

    p_pooling = sub.add_parser("pooling", help="embedding model x pooling strategy matrix")
    add_common(p_pooling)

    p_classify = sub.add_parser("classify", help="four-class quality labels with semdist stats")
    add_common(p_classify)

    p_export = sub.add_parser("export-cache", help="dump response cache as stub fixtures")
    add_common(p_export)

    return parser


COMMANDS = {
    "metrics": runner.cmd_metrics,
    "judge": runner.cmd_judge,
    "pooling": runner.cmd_pooling,
    "classify": runner.cmd_classify,
    "export-cache": runner.cmd_export_cache,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config_file(args.config) if args.config else RunConfig()
        config = apply_cli_overrides(config, args)
        out_dir = COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"hypeval: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusLoadError, StubMissError, EmbeddingFileError, ProtocolError, ValueError) as exc:
        print(f"hypeval: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelConfigError as exc:
        print(f"hypeval: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"hypeval: transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except OSError as exc:
        print(f"hypeval: io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"hypeval: {args.command} reports written to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
