import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from blocking.block_index import BlockIndex
from disambiguators.clustering import Clustering
from labeling.labels import PairLabels
from metrics.pairwise import BlockScore, MetricInputError, PairCounts

logger = logging.getLogger(__name__)

METRIC_NAMES = ("precision", "recall", "f1")
SAMPLE_SD = "sample"
POPULATION_SD = "population"


@dataclass(frozen=True)
class MetricSummary:
    mean: Optional[float]
    sd: Optional[float]
    blocks_scored: int
    blocks_excluded: int


@dataclass(frozen=True)
class SizeStratum:
    block_size: int
    block_count: int
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]

    def metric(self, name: str) -> Optional[float]:
        return getattr(self, name)


@dataclass(frozen=True)
class AggregateScore:
    precision: MetricSummary
    recall: MetricSummary
    f1: MetricSummary
    per_size_strata: Tuple[SizeStratum, ...]

    def metric(self, name: str) -> MetricSummary:
        return getattr(self, name)

    # flat accessors matching the report columns
    @property
    def mean_precision(self):
        return self.precision.mean

    @property
    def mean_recall(self):
        return self.recall.mean

    @property
    def mean_f1(self):
        return self.f1.mean


def _summary(values: List[float], total: int, sd_flavor: str) -> MetricSummary:
    if not values:
        return MetricSummary(mean=None, sd=None, blocks_scored=0, blocks_excluded=total)
    data = np.asarray(values, dtype=np.float64)
    if len(values) == 1:
        sd = 0.0
    else:
        sd = float(np.std(data, ddof=1 if sd_flavor == SAMPLE_SD else 0))
    return MetricSummary(
        mean=float(np.mean(data)),
        sd=sd,
        blocks_scored=len(values),
        blocks_excluded=total - len(values),
    )


def _mean_or_none(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def aggregate_scores(scores: Sequence[BlockScore], sd_flavor: str = SAMPLE_SD) -> AggregateScore:
    if sd_flavor not in (SAMPLE_SD, POPULATION_SD):
        raise ValueError(f"unknown SD flavor: {sd_flavor}")

    summaries = {}
    for name in METRIC_NAMES:
        defined = [s.metric(name) for s in scores if s.metric(name) is not None]
        summaries[name] = _summary(defined, len(scores), sd_flavor)

    by_size: Dict[int, List[BlockScore]] = defaultdict(list)
    for score in scores:
        by_size[score.block_size].append(score)
    strata = []
    for size in sorted(by_size):
        group = by_size[size]
        means = {
            name: _mean_or_none([s.metric(name) for s in group if s.metric(name) is not None])
            for name in METRIC_NAMES
        }
        strata.append(SizeStratum(block_size=size, block_count=len(group), **means))

    return AggregateScore(per_size_strata=tuple(strata), **summaries)


def pair_recall_scores(clustering: Clustering, pairs: PairLabels,
                       blocks: BlockIndex) -> List[BlockScore]:
    """Per-block share of labeled pairs that the clustering keeps together."""
    per_block: Dict[str, List[Tuple[int, int]]] = defaultdict(list)
    for a, b in sorted(pairs.pairs):
        key_a, key_b = blocks.block_of(a), blocks.block_of(b)
        if key_a is None or key_b is None or key_a != key_b:
            raise MetricInputError(f"pair ({a}, {b}) does not lie inside a single block")
        per_block[key_a].append((a, b))

    scores = []
    for key, members in blocks.blocks.items():
        block_pairs = per_block.get(key, [])
        matched = 0
        for a, b in block_pairs:
            cluster_a, cluster_b = clustering.cluster_of(a), clustering.cluster_of(b)
            if cluster_a is None or cluster_b is None:
                raise MetricInputError(f"pair ({a}, {b}) is not clustered by {clustering.method_id}")
            if cluster_a == cluster_b:
                matched += 1
        recall = matched / len(block_pairs) if block_pairs else None
        scores.append(BlockScore(
            block_key=key,
            block_size=len(members),
            precision=None,
            recall=recall,
            f1=None,
            pair_counts=PairCounts(predicted=None, truth=len(block_pairs), intersection=matched),
        ))
    return scores


def pair_recall(clustering: Clustering, pairs: PairLabels, blocks: BlockIndex,
                sd_flavor: str = SAMPLE_SD) -> AggregateScore:
    return aggregate_scores(pair_recall_scores(clustering, pairs, blocks), sd_flavor=sd_flavor)
