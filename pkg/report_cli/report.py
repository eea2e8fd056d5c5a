import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Tuple

from blocking.block_index import SizeDistribution, SizeRow
from metrics.aggregate import AggregateScore, MetricSummary, SizeStratum
from metrics.bcubed import BCubedScore
from metrics.pairwise import BlockScore, PairCounts

# headline metric per family for figure data
FAMILY_METRIC = {
    "orcid_homonym": "precision",
    "orcid_synonym": "recall",
    "self_citation": "recall",
}


def family_metric(family: str) -> str:
    return FAMILY_METRIC.get(family.split(":")[0], "f1")


@dataclass(frozen=True)
class CombinationResult:
    family: str
    method: str
    aggregate: AggregateScore
    distribution: SizeDistribution
    block_scores: Tuple[BlockScore, ...]
    match_stats: Dict[str, object]
    bcubed: Optional[BCubedScore] = None


@dataclass(frozen=True)
class CombinationFailure:
    family: str
    method: str
    error: str


@dataclass(frozen=True)
class EvaluationReport:
    toolkit_version: str
    config: Dict[str, object]
    results: Tuple[CombinationResult, ...] = ()
    failures: Tuple[CombinationFailure, ...] = ()
    label_stats: Dict[str, Dict[str, object]] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationReport":
        return cls(
            toolkit_version=data["toolkit_version"],
            config=data["config"],
            results=tuple(_result_from_dict(item) for item in data.get("results", [])),
            failures=tuple(CombinationFailure(**item) for item in data.get("failures", [])),
            label_stats=data.get("label_stats", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        return cls.from_dict(json.loads(text))


def _block_score_from_dict(data: dict) -> BlockScore:
    return BlockScore(
        block_key=data["block_key"],
        block_size=data["block_size"],
        precision=data["precision"],
        recall=data["recall"],
        f1=data["f1"],
        pair_counts=PairCounts(**data["pair_counts"]),
    )


def _aggregate_from_dict(data: dict) -> AggregateScore:
    return AggregateScore(
        precision=MetricSummary(**data["precision"]),
        recall=MetricSummary(**data["recall"]),
        f1=MetricSummary(**data["f1"]),
        per_size_strata=tuple(SizeStratum(**row) for row in data["per_size_strata"]),
    )


def _result_from_dict(data: dict) -> CombinationResult:
    bcubed = data.get("bcubed")
    return CombinationResult(
        family=data["family"],
        method=data["method"],
        aggregate=_aggregate_from_dict(data["aggregate"]),
        distribution=SizeDistribution(
            rows=tuple(SizeRow(**row) for row in data["distribution"]["rows"])
        ),
        block_scores=tuple(_block_score_from_dict(item) for item in data["block_scores"]),
        match_stats=data["match_stats"],
        bcubed=BCubedScore(**bcubed) if bcubed is not None else None,
    )
