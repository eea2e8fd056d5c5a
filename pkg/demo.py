import logging
import os

from blocking.block_index import block_size_distribution, build_blocks
from corpus_ingest.dblp_parser import CorpusBuilder
from report_cli.config import load_config
from report_cli.pipeline import EvaluationPipeline
from report_cli.report_writer import emit_report, format_summary_table

CONFIG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config.json")


def demo_ingest(pipeline):
    print("Ingesting the bundled DBLP fixture...")
    corpus = pipeline.ingest()
    counts = corpus.counts
    print(f"Read {counts.records_read} records, kept {counts.records_kept}, "
          f"dropped {counts.records_dropped_by_type}")
    print(f"{len(corpus.mentions)} author mentions")

    builder = CorpusBuilder(data_dir=pipeline.config.output_dir)
    os.makedirs(pipeline.config.output_dir, exist_ok=True)
    path = builder.save_store(corpus, "corpus.jsonl")
    print(f"Corpus saved to {path}")
    return corpus


def demo_blocking(corpus):
    print("Blocking every mention by first initial and surname...")
    blocks = build_blocks(corpus.mentions, "first_initial")
    distribution = block_size_distribution(blocks)
    print(f"{len(blocks)} blocks")
    for row in distribution.rows:
        print(f"  size {row.block_size}: {row.block_count} blocks "
              f"(cumulative ratio {row.cumulative_ratio:.2f})")


def demo_labels(pipeline):
    print("Building labeled-data families...")
    for name, family in pipeline.label().items():
        print(f"  {name}: {family.stats}")


def demo_evaluation(pipeline):
    print("Scoring every disambiguator against every family...")
    report = pipeline.run()
    paths = emit_report(report, pipeline.config.output_dir, pipeline.config.formats)
    print(format_summary_table(report))
    for path in paths:
        print(f"Wrote {path}")
    return report


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING)
    print("Running andbench demonstration")
    print("-" * 50)

    pipeline = EvaluationPipeline(load_config(CONFIG_PATH))
    corpus = demo_ingest(pipeline)
    print("-" * 50)

    demo_blocking(corpus)
    print("-" * 50)

    demo_labels(pipeline)
    print("-" * 50)

    report = demo_evaluation(pipeline)
    print("-" * 50)

    print("Demonstration complete." if report.complete else
          f"Demonstration finished with {len(report.failures)} failed combinations.")
