"""Command-line entry: ingest, label, disambiguate, evaluate, report, run."""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from corpus_ingest.errors import IngestError
from report_cli import __version__
from report_cli.config import CONFIG_ENV_VAR, FORMATS, ConfigError, load_config
from report_cli.pipeline import EvaluationPipeline
from report_cli.report import EvaluationReport
from report_cli.report_writer import (
    FILE_NAMES,
    ReportWriteError,
    emit_report,
    format_summary_table,
    load_report,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_FATAL = 2

SUBCOMMANDS = ("ingest", "label", "disambiguate", "evaluate", "report", "run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="andbench",
        description="Evaluate author-name disambiguation on a DBLP dump.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help=f"pipeline config (default: ${CONFIG_ENV_VAR} or config.json)")
    parser.add_argument("--out", help="output directory, overrides output_dir")
    parser.add_argument("--threads", type=int, help="parallel combinations, overrides threads")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; no pipeline step is randomized")
    parser.add_argument("--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", help="parse the dump and write corpus.jsonl")
    sub.add_parser("label", help="build labeled-data families")
    sub.add_parser("disambiguate", help="write one clustering per disambiguator")
    sub.add_parser("evaluate", help="score every combination and write report.json")
    report = sub.add_parser("report", help="re-emit report formats from report.json")
    report.add_argument("--report", help="path to report.json (default: <out>/report.json)")
    report.add_argument("--formats", nargs="+", choices=FORMATS, help="formats to emit")
    sub.add_parser("run", help="full pipeline with every artifact")
    return parser


def configure_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _load(args):
    config = load_config(args.config)
    if args.out:
        config.output_dir = os.path.abspath(args.out)
    if args.threads is not None:
        config.threads = args.threads
    config.validate()
    return config


def _finish(report: EvaluationReport) -> int:
    print(format_summary_table(report))
    for failure in report.failures:
        logger.error("No score for %s x %s: %s", failure.family, failure.method, failure.error)
    return EXIT_OK if report.complete else EXIT_INCOMPLETE


def _report_command(args) -> int:
    formats = args.formats
    out_dir = args.out
    if formats is None or out_dir is None:
        try:
            config = load_config(args.config)
            formats = formats or config.formats
            out_dir = out_dir or config.output_dir
        except ConfigError:
            if out_dir is None:
                raise
            formats = formats or list(FORMATS)
    path = args.report or os.path.join(out_dir, FILE_NAMES["json"])
    try:
        report = load_report(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc
    emit_report(report, out_dir, [f for f in formats if f != "json"])
    return _finish(report)


def dispatch(args) -> int:
    if args.command == "report":
        return _report_command(args)

    config = _load(args)
    pipeline = EvaluationPipeline(config)
    out_dir = config.output_dir

    if args.command == "ingest":
        paths = pipeline.write_ingest(out_dir)
    elif args.command == "label":
        paths = pipeline.write_labels(out_dir)
    elif args.command == "disambiguate":
        paths = pipeline.write_clusterings(out_dir)
    elif args.command == "evaluate":
        report = pipeline.run()
        emit_report(report, out_dir, ["json"])
        return _finish(report)
    else:
        paths = pipeline.write_ingest(out_dir)
        paths += pipeline.write_labels(out_dir)
        paths += pipeline.write_clusterings(out_dir)
        report = pipeline.run()
        emit_report(report, out_dir, config.formats)
        return _finish(report)

    for path in paths:
        logger.info("Wrote %s", path)
    return EXIT_OK


def _error_record(exc: Exception) -> dict:
    if isinstance(exc, IngestError):
        return exc.to_record()
    if isinstance(exc, ReportWriteError):
        return {"error": "output", "message": str(exc), "path": exc.path}
    return {"error": "config", "message": str(exc)}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    if args.seed is not None:
        logger.debug("--seed %d ignored: no randomized step", args.seed)
    try:
        return dispatch(args)
    except (IngestError, ConfigError, ReportWriteError) as exc:
        logger.debug("Fatal error", exc_info=True)
        sys.stderr.write(json.dumps(_error_record(exc), sort_keys=True) + "\n")
        return EXIT_FATAL
