import json

import pandas as pd
import pytest

from conftest import data_path
from report_cli import cli
from report_cli.config import ConfigError, PipelineConfig, load_config
from report_cli.pipeline import EvaluationPipeline, run_pipeline
from report_cli.report import EvaluationReport, family_metric
from report_cli.report_writer import (
    FIGURE_COLUMNS,
    SUMMARY_COLUMNS,
    emit_report,
    figure_frame,
    summary_frame,
)

MANUAL = "manual:fixture"


def _config_dict(tmp_path, **overrides):
    data = {
        "inputs": {
            "dump": data_path("dblp_golden.xml"),
            "synonyms": data_path("synonyms.tsv"),
            "orcid_mapping": data_path("orcid_mapping.tsv"),
            "citation_graph": data_path("citations.tsv"),
            "labeled_datasets": [{"name": "fixture", "path": data_path("labeled_fixture.tsv")}],
        },
        "disambiguators": ["all_initials", "first_initial"],
        "families": ["manual"],
        "output_dir": str(tmp_path / "out"),
    }
    data.update(overrides)
    return data


def _write_config(tmp_path, **overrides):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(_config_dict(tmp_path, **overrides)), encoding="utf-8")
    return str(path)


def _by_method(report):
    return {(r.family, r.method): r for r in report.results}


def test_baseline_run_has_two_rows(tmp_path):
    report = run_pipeline(PipelineConfig.from_dict(_config_dict(tmp_path)))
    assert report.complete
    assert [(r.family, r.method) for r in report.results] == [
        (MANUAL, "all_initials"), (MANUAL, "first_initial"),
    ]

    first = _by_method(report)[(MANUAL, "first_initial")].aggregate
    assert first.mean_precision == pytest.approx(37 / 120)
    assert first.mean_recall == pytest.approx(1.0)
    assert first.recall.sd == pytest.approx(0.0)
    assert first.mean_f1 == pytest.approx(11 / 24)

    fine = _by_method(report)[(MANUAL, "all_initials")].aggregate
    assert fine.mean_precision == pytest.approx(7 / 15)
    assert fine.mean_recall == pytest.approx(0.875)
    assert fine.mean_f1 == pytest.approx(0.5625)


def test_block_scores_and_distribution(tmp_path):
    report = run_pipeline(PipelineConfig.from_dict(_config_dict(tmp_path)))
    result = _by_method(report)[(MANUAL, "first_initial")]
    scores = {s.block_key: s for s in result.block_scores}
    assert sorted(scores) == ["b|liu", "m|newman", "w|wang", "y|zhang"]
    assert scores["w|wang"].block_size == 5
    assert scores["w|wang"].precision == pytest.approx(0.2)
    assert scores["m|newman"].f1 == pytest.approx(0.5)
    rows = [(r.block_size, r.block_count, r.cumulative_ratio) for r in result.distribution.rows]
    assert rows == [(3, 1, 0.25), (4, 1, 0.5), (5, 2, 1.0)]
    assert result.match_stats["entries_matched"] == 17
    assert result.bcubed is not None
    assert result.bcubed.recall == pytest.approx(1.0)


def test_dblp_clustering_with_synonyms(tmp_path):
    config = PipelineConfig.from_dict(_config_dict(tmp_path, disambiguators=["dblp"]))
    report = run_pipeline(config)
    aggregate = report.results[0].aggregate
    assert aggregate.mean_precision == pytest.approx(17 / 24)
    assert aggregate.mean_recall == pytest.approx(0.875)
    assert aggregate.mean_f1 == pytest.approx(23 / 30)


def test_all_families(tmp_path):
    config = PipelineConfig.from_dict(_config_dict(
        tmp_path,
        disambiguators=["dblp", "first_initial"],
        families=["manual", "orcid", "orcid_homonym", "orcid_synonym", "self_citation"],
    ))
    report = run_pipeline(config)
    assert report.complete
    families = [r.family for r in report.results]
    assert families == [MANUAL] * 2 + ["orcid"] * 2 + ["orcid_homonym"] * 2 + \
        ["orcid_synonym"] * 2 + ["self_citation"] * 2

    results = _by_method(report)
    homonym = results[("orcid_homonym", "first_initial")].aggregate
    assert homonym.mean_precision == pytest.approx(0.4)
    assert results[("orcid_homonym", "dblp")].aggregate.mean_precision == pytest.approx(1.0)
    assert results[("orcid_synonym", "dblp")].aggregate.mean_recall == pytest.approx(1.0)

    self_cite = results[("self_citation", "first_initial")]
    assert self_cite.aggregate.recall.blocks_scored == 5
    assert self_cite.aggregate.mean_recall == pytest.approx(1.0)
    assert self_cite.aggregate.precision.mean is None
    assert self_cite.bcubed is None
    assert report.label_stats["self_citation"]["pairs"] == 5
    assert report.label_stats["orcid"]["conflicting_names"] == 1


def test_self_citation_blocks_on_first_initial_under_all_initials(tmp_path):
    dump = tmp_path / "dump.xml"
    dump.write_text(
        '<?xml version="1.0" encoding="UTF-8"?>\n<dblp>\n'
        '<article key="p/1"><author>John A. Smith</author><title>First.</title>'
        '<year>2019</year></article>\n'
        '<article key="p/2"><author>J. Smith</author><title>Second.</title>'
        '<year>2020</year></article>\n</dblp>\n',
        encoding="utf-8",
    )
    citations = tmp_path / "citations.tsv"
    citations.write_text("p/1\tp/2\n", encoding="utf-8")
    config = PipelineConfig.from_dict({
        "inputs": {"dump": str(dump), "citation_graph": str(citations)},
        "block_key": "all_initials",
        "disambiguators": ["dblp", "first_initial"],
        "families": ["self_citation"],
        "output_dir": str(tmp_path / "out"),
    })
    report = run_pipeline(config)
    assert report.complete
    assert not report.failures
    for result in report.results:
        assert [s.block_key for s in result.block_scores] == ["j|smith"]
    recall = {r.method: r.aggregate.mean_recall for r in report.results}
    assert recall == {"dblp": 0.0, "first_initial": 1.0}


def test_corpus_wide_blocking_reports_corpus_block_sizes(tmp_path):
    flags = {"corpus_wide_blocking": True}
    config = PipelineConfig.from_dict(_config_dict(
        tmp_path, families=["orcid"], disambiguators=["dblp"], flags=flags))
    result = run_pipeline(config).results[0]
    sizes = {s.block_key: s.block_size for s in result.block_scores}
    assert sizes["b|liu"] == 4

    config = PipelineConfig.from_dict(_config_dict(tmp_path, families=["orcid"],
                                                   disambiguators=["dblp"]))
    result = run_pipeline(config).results[0]
    assert {s.block_key: s.block_size for s in result.block_scores}["b|liu"] == 1


def test_zero_disambiguators_is_a_config_error(tmp_path):
    config = PipelineConfig.from_dict(_config_dict(tmp_path, disambiguators=[]))
    with pytest.raises(ConfigError):
        run_pipeline(config)
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("overrides", [
    {"families": []},
    {"families": ["self_citation"], "inputs": {"dump": data_path("dblp_golden.xml")}},
    {"disambiguators": ["magic"]},
    {"block_key": "surname_only"},
    {"threads": 0},
])
def test_invalid_configs(tmp_path, overrides):
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(_config_dict(tmp_path, **overrides)).validate()


def test_missing_input_file(tmp_path):
    data = _config_dict(tmp_path)
    data["inputs"]["synonyms"] = str(tmp_path / "nope.tsv")
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(data).validate()


def test_unknown_config_key(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(_config_dict(tmp_path, colour="blue"))


def test_relative_paths_resolve_against_config_dir(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"inputs": {"dump": "corpus.xml"}, "output_dir": "results"}),
                    encoding="utf-8")
    config = load_config(str(path))
    assert config.inputs.dump == str(tmp_path / "corpus.xml")
    assert config.output_dir == str(tmp_path / "results")


def test_config_from_environment(tmp_path, monkeypatch):
    path = _write_config(tmp_path)
    monkeypatch.setenv("ANDBENCH_CONFIG", path)
    assert load_config().disambiguators == ["all_initials", "first_initial"]


def test_report_json_round_trip(tmp_path):
    config = PipelineConfig.from_dict(_config_dict(
        tmp_path, disambiguators=["dblp", "first_initial"],
        families=["manual", "orcid_homonym", "self_citation"],
    ))
    report = run_pipeline(config)
    assert EvaluationReport.from_json(report.to_json()) == report


def test_config_echo_reruns_identically(tmp_path):
    report = run_pipeline(PipelineConfig.from_dict(_config_dict(tmp_path)))
    again = run_pipeline(PipelineConfig.from_dict(report.config))
    assert again.to_json() == report.to_json()


def test_emit_report_formats(tmp_path):
    report = run_pipeline(PipelineConfig.from_dict(_config_dict(tmp_path)))
    out = tmp_path / "emitted"
    paths = emit_report(report, str(out))
    assert sorted(p.split("/")[-1] for p in paths) == [
        "figure_data.csv", "per_block_scores.csv", "report.json", "summary_table.csv",
    ]
    summary = (out / "summary_table.csv").read_text(encoding="utf-8").splitlines()
    assert summary[0] == ",".join(SUMMARY_COLUMNS)
    assert summary[1].startswith("manual:fixture,all_initials,")
    figure = (out / "figure_data.csv").read_text(encoding="utf-8").splitlines()
    assert figure[0] == ",".join(FIGURE_COLUMNS)
    assert figure[1] == "manual:fixture,all_initials,f1,3,1.0,1,0.25"
    assert b"\r\n" not in (out / "per_block_scores.csv").read_bytes()


def test_absent_values_are_blank_not_zero(tmp_path):
    config = PipelineConfig.from_dict(_config_dict(
        tmp_path, families=["self_citation"], disambiguators=["first_initial"]))
    report = run_pipeline(config)
    frame = summary_frame(report)
    assert pd.isna(frame.loc[0, "mean_precision"])
    out = tmp_path / "emitted"
    emit_report(report, str(out), ["summary_table"])
    row = (out / "summary_table.csv").read_text(encoding="utf-8").splitlines()[1].split(",")
    assert row[0] == "self_citation"
    assert row[2] == ""
    assert row[4] == "1.0"


def test_empty_report_writes_headers_only(tmp_path):
    report = EvaluationReport(toolkit_version="0", config={})
    emit_report(report, str(tmp_path), ["summary_table", "per_block_csv", "figure_data_csv"])
    for name, columns in (("summary_table.csv", SUMMARY_COLUMNS),
                          ("figure_data.csv", FIGURE_COLUMNS)):
        assert (tmp_path / name).read_text(encoding="utf-8") == ",".join(columns) + "\n"
    assert figure_frame(report).empty


def test_family_metric():
    assert family_metric("orcid_homonym") == "precision"
    assert family_metric("orcid_synonym") == "recall"
    assert family_metric("self_citation") == "recall"
    assert family_metric("manual:penn") == "f1"
    assert family_metric("orcid") == "f1"


def test_stage_artifacts(tmp_path):
    config = PipelineConfig.from_dict(_config_dict(
        tmp_path, families=["manual", "self_citation"]))
    pipeline = EvaluationPipeline(config)
    out = tmp_path / "stages"
    names = {p.split("/")[-1] for p in pipeline.write_ingest(str(out))}
    names |= {p.split("/")[-1] for p in pipeline.write_labels(str(out))}
    names |= {p.split("/")[-1] for p in pipeline.write_clusterings(str(out))}
    assert names == {
        "corpus.jsonl", "ingest_stats.json", "labels_manual_fixture.csv",
        "ambiguity_fixture.jsonl", "pairs_self_citation.csv",
        "clustering_all_initials.csv", "clustering_first_initial.csv",
    }
    stats = json.loads((out / "ingest_stats.json").read_text(encoding="utf-8"))
    assert stats["records_kept"] == 12


def test_cli_run_is_byte_identical(tmp_path, capsys):
    config = _write_config(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["--config", config, "run"]) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert cli.main(["--config", config, "run"]) == 0
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second
    assert "report.json" in first
    assert "first_initial" in capsys.readouterr().out


def test_cli_zero_disambiguators_exits_2(tmp_path, capsys):
    config = _write_config(tmp_path, disambiguators=[])
    assert cli.main(["--config", config, "run"]) == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "config"
    assert not (tmp_path / "out").exists()


def test_cli_fatal_ingest_exits_2(tmp_path, capsys):
    dump = tmp_path / "broken.xml"
    dump.write_bytes(b"<dblp><article key='a/1'><author>A &nosuch; B</author></article></dblp>")
    data = _config_dict(tmp_path)
    data["inputs"]["dump"] = str(dump)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    assert cli.main(["--config", str(path), "ingest"]) == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "ingest"
    assert error["entity"] == "nosuch"


def test_cli_failed_combination_exits_1(tmp_path, monkeypatch, capsys):
    import report_cli.pipeline as pipeline_module

    real = pipeline_module.run_method

    def flaky(method_id, *args, **kwargs):
        if method_id == "all_initials":
            raise RuntimeError("boom")
        return real(method_id, *args, **kwargs)

    monkeypatch.setattr(pipeline_module, "run_method", flaky)
    config = _write_config(tmp_path)
    assert cli.main(["--config", config, "evaluate"]) == 1
    report = EvaluationReport.from_json((tmp_path / "out" / "report.json").read_text("utf-8"))
    assert [(f.family, f.method) for f in report.failures] == [(MANUAL, "all_initials")]
    assert [r.method for r in report.results] == ["first_initial"]
    capsys.readouterr()


def test_cli_report_reemits_from_json(tmp_path, capsys):
    config = _write_config(tmp_path)
    assert cli.main(["--config", config, "evaluate"]) == 0
    out = tmp_path / "out"
    assert not (out / "figure_data.csv").exists()
    assert cli.main(["--config", config, "report"]) == 0
    assert (out / "figure_data.csv").exists()
    assert (out / "summary_table.csv").exists()
    capsys.readouterr()


def test_cli_out_override(tmp_path, capsys):
    config = _write_config(tmp_path)
    elsewhere = tmp_path / "elsewhere"
    assert cli.main(["--config", config, "--out", str(elsewhere), "disambiguate"]) == 0
    assert (elsewhere / "clustering_first_initial.csv").exists()
    capsys.readouterr()
