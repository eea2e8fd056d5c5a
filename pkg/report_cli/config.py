import json
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from disambiguators.clustering import METHODS

CONFIG_ENV_VAR = "ANDBENCH_CONFIG"
DEFAULT_CONFIG_PATH = "config.json"

FAMILY_MANUAL = "manual"
FAMILY_ORCID = "orcid"
FAMILY_ORCID_HOMONYM = "orcid_homonym"
FAMILY_ORCID_SYNONYM = "orcid_synonym"
FAMILY_SELF_CITATION = "self_citation"
FAMILIES = (FAMILY_MANUAL, FAMILY_ORCID, FAMILY_ORCID_HOMONYM, FAMILY_ORCID_SYNONYM,
            FAMILY_SELF_CITATION)

FORMATS = ("summary_table", "per_block_csv", "figure_data_csv", "json")


class ConfigError(ValueError):
    """Pipeline config is missing a required piece or points at absent files."""


@dataclass
class LabeledDatasetSpec:
    name: str
    path: str


@dataclass
class PipelineInputs:
    dump: str
    entity_table: Optional[str] = None
    synonyms: Optional[str] = None
    orcid_mapping: Optional[str] = None
    orcid_from_dump: bool = False
    citation_graph: Optional[str] = None
    citation_format: str = "edge_list"
    labeled_datasets: List[LabeledDatasetSpec] = field(default_factory=list)


@dataclass
class PipelineFlags:
    resolve_ambiguous: bool = False
    sd_flavor: str = "sample"
    strip_suffix: bool = True
    corpus_wide_blocking: bool = False
    homonym_match_on: str = "display_name"
    synonym_only: bool = True


@dataclass
class PipelineConfig:
    inputs: PipelineInputs
    pub_types: List[str] = field(default_factory=lambda: ["article", "inproceedings"])
    block_key: str = "first_initial"
    disambiguators: List[str] = field(default_factory=lambda: list(METHODS))
    families: List[str] = field(default_factory=lambda: [FAMILY_MANUAL])
    output_dir: str = "output"
    formats: List[str] = field(default_factory=lambda: list(FORMATS))
    flags: PipelineFlags = field(default_factory=PipelineFlags)
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict, base_dir: str = ".") -> "PipelineConfig":
        try:
            raw_inputs = dict(data["inputs"])
        except (KeyError, TypeError) as exc:
            raise ConfigError("config needs an 'inputs' section") from exc

        def resolve(path):
            if path is None or os.path.isabs(path):
                return path
            return os.path.normpath(os.path.join(base_dir, path))

        datasets = [
            LabeledDatasetSpec(name=item["name"], path=resolve(item["path"]))
            for item in raw_inputs.pop("labeled_datasets", [])
        ]
        for key in ("dump", "entity_table", "synonyms", "orcid_mapping", "citation_graph"):
            raw_inputs[key] = resolve(raw_inputs.get(key))
        try:
            inputs = PipelineInputs(labeled_datasets=datasets, **raw_inputs)
            flags = PipelineFlags(**data.get("flags", {}))
            rest = {k: v for k, v in data.items() if k not in ("inputs", "flags")}
            config = cls(inputs=inputs, flags=flags, **rest)
        except TypeError as exc:
            raise ConfigError(f"unknown or missing config key: {exc}") from exc
        config.output_dir = resolve(config.output_dir)
        return config

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        if not self.disambiguators:
            raise ConfigError("at least one disambiguator must be selected")
        if not self.families:
            raise ConfigError("at least one labeled-data family must be selected")
        unknown = [m for m in self.disambiguators if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown disambiguators {unknown}; choose from {list(METHODS)}")
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise ConfigError(f"unknown families {unknown}; choose from {list(FAMILIES)}")
        unknown = [f for f in self.formats if f not in FORMATS]
        if unknown:
            raise ConfigError(f"unknown formats {unknown}; choose from {list(FORMATS)}")
        if self.block_key not in ("first_initial", "all_initials"):
            raise ConfigError(f"unknown block key scheme {self.block_key!r}")
        if self.flags.sd_flavor not in ("sample", "population"):
            raise ConfigError(f"unknown sd_flavor {self.flags.sd_flavor!r}")
        if self.flags.homonym_match_on not in ("display_name", "block_key"):
            raise ConfigError(f"unknown homonym_match_on {self.flags.homonym_match_on!r}")
        if self.inputs.citation_format not in ("edge_list", "record_json_lines"):
            raise ConfigError(f"unknown citation_format {self.inputs.citation_format!r}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")

        if FAMILY_MANUAL in self.families and not self.inputs.labeled_datasets:
            raise ConfigError("family 'manual' needs inputs.labeled_datasets")
        orcid_families = {FAMILY_ORCID, FAMILY_ORCID_HOMONYM, FAMILY_ORCID_SYNONYM}
        if orcid_families & set(self.families) and not (
                self.inputs.orcid_mapping or self.inputs.orcid_from_dump):
            raise ConfigError("ORCID families need inputs.orcid_mapping or inputs.orcid_from_dump")
        if FAMILY_SELF_CITATION in self.families and not self.inputs.citation_graph:
            raise ConfigError("family 'self_citation' needs inputs.citation_graph")

        paths = [self.inputs.dump, self.inputs.entity_table, self.inputs.synonyms,
                 self.inputs.orcid_mapping, self.inputs.citation_graph]
        paths += [spec.path for spec in self.inputs.labeled_datasets]
        missing = [p for p in paths if p is not None and not os.path.exists(p)]
        if missing:
            raise ConfigError(f"input files not found: {missing}")


def default_config_path() -> str:
    return os.environ.get(CONFIG_ENV_VAR, DEFAULT_CONFIG_PATH)


def load_config(path: Optional[str] = None) -> PipelineConfig:
    path = path or default_config_path()
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return PipelineConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
