import logging
import os
from typing import Iterable, List, Optional

import pandas as pd

from report_cli.config import FORMATS
from report_cli.report import EvaluationReport, family_metric

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "dataset", "method",
    "mean_precision", "sd_precision",
    "mean_recall", "sd_recall",
    "mean_f1", "sd_f1",
    "blocks_scored", "blocks_excluded",
    "bcubed_precision", "bcubed_recall", "bcubed_f1",
]

PER_BLOCK_COLUMNS = [
    "dataset", "method", "block_key", "block_size",
    "precision", "recall", "f1",
    "predicted_pairs", "truth_pairs", "intersection_pairs",
]

FIGURE_COLUMNS = [
    "family", "method", "metric", "block_size",
    "mean_metric", "block_count", "cumulative_ratio",
]

FAILURE_COLUMNS = ["dataset", "method", "error"]

FILE_NAMES = {
    "summary_table": "summary_table.csv",
    "per_block_csv": "per_block_scores.csv",
    "figure_data_csv": "figure_data.csv",
    "json": "report.json",
}


class ReportWriteError(OSError):
    """An output file could not be written."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path


def summary_frame(report: EvaluationReport) -> pd.DataFrame:
    rows = []
    for result in report.results:
        agg = result.aggregate
        bcubed = result.bcubed
        headline = agg.metric(family_metric(result.family))
        rows.append({
            "dataset": result.family,
            "method": result.method,
            "mean_precision": agg.precision.mean,
            "sd_precision": agg.precision.sd,
            "mean_recall": agg.recall.mean,
            "sd_recall": agg.recall.sd,
            "mean_f1": agg.f1.mean,
            "sd_f1": agg.f1.sd,
            "blocks_scored": headline.blocks_scored,
            "blocks_excluded": headline.blocks_excluded,
            "bcubed_precision": bcubed.precision if bcubed else None,
            "bcubed_recall": bcubed.recall if bcubed else None,
            "bcubed_f1": bcubed.f1 if bcubed else None,
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS, dtype=object)


def per_block_frame(report: EvaluationReport) -> pd.DataFrame:
    rows = [
        {
            "dataset": result.family,
            "method": result.method,
            "block_key": score.block_key,
            "block_size": score.block_size,
            "precision": score.precision,
            "recall": score.recall,
            "f1": score.f1,
            "predicted_pairs": score.pair_counts.predicted,
            "truth_pairs": score.pair_counts.truth,
            "intersection_pairs": score.pair_counts.intersection,
        }
        for result in report.results
        for score in result.block_scores
    ]
    return pd.DataFrame(rows, columns=PER_BLOCK_COLUMNS, dtype=object)


def figure_frame(report: EvaluationReport) -> pd.DataFrame:
    """Mean headline metric per block size plus the cumulative block-size ratio."""
    rows = []
    for result in report.results:
        metric = family_metric(result.family)
        for stratum in result.aggregate.per_size_strata:
            rows.append({
                "family": result.family,
                "method": result.method,
                "metric": metric,
                "block_size": stratum.block_size,
                "mean_metric": stratum.metric(metric),
                "block_count": stratum.block_count,
                "cumulative_ratio": result.distribution.ratio_at(stratum.block_size),
            })
    return pd.DataFrame(rows, columns=FIGURE_COLUMNS, dtype=object)


def failures_frame(report: EvaluationReport) -> pd.DataFrame:
    rows = [{"dataset": f.family, "method": f.method, "error": f.error} for f in report.failures]
    return pd.DataFrame(rows, columns=FAILURE_COLUMNS, dtype=object)


def format_summary_table(report: EvaluationReport) -> str:
    frame = summary_frame(report)[SUMMARY_COLUMNS[:8]].copy()
    for column in SUMMARY_COLUMNS[2:8]:
        frame[column] = pd.to_numeric(frame[column])
    if frame.empty:
        return ",".join(frame.columns)
    return frame.to_string(index=False, na_rep="-", float_format=lambda v: f"{v:.4f}")


def _write_csv(frame: pd.DataFrame, path: str):
    # absent metrics stay empty cells, never 0
    try:
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8", na_rep="")
    except OSError as exc:
        raise ReportWriteError(path, exc.strerror or str(exc)) from exc


def _write_text(text: str, path: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as exc:
        raise ReportWriteError(path, exc.strerror or str(exc)) from exc


def emit_report(report: EvaluationReport, out_dir: str,
                formats: Optional[Iterable[str]] = None) -> List[str]:
    formats = list(FORMATS if formats is None else formats)
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ValueError(f"unknown report formats {unknown}")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ReportWriteError(out_dir, exc.strerror or str(exc)) from exc

    writers = {
        "summary_table": lambda path: _write_csv(summary_frame(report), path),
        "per_block_csv": lambda path: _write_csv(per_block_frame(report), path),
        "figure_data_csv": lambda path: _write_csv(figure_frame(report), path),
        "json": lambda path: _write_text(report.to_json(), path),
    }
    paths = []
    for fmt in FORMATS:
        if fmt not in formats:
            continue
        path = os.path.join(out_dir, FILE_NAMES[fmt])
        writers[fmt](path)
        paths.append(path)

    if report.failures:
        path = os.path.join(out_dir, "failures.csv")
        _write_csv(failures_frame(report), path)
        paths.append(path)

    logger.info("Wrote %d report files to %s", len(paths), out_dir)
    return paths


def load_report(path: str) -> EvaluationReport:
    with open(path, "r", encoding="utf-8") as f:
        return EvaluationReport.from_json(f.read())
