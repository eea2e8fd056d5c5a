from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from disambiguators.clustering import Clustering
from labeling.labels import MatchedLabels


class MetricInputError(ValueError):
    """Inputs to a metric are inconsistent (unlabeled, unclustered or misplaced mentions)."""


@dataclass(frozen=True)
class PairCounts:
    predicted: Optional[int]
    truth: int
    intersection: int


@dataclass(frozen=True)
class BlockScore:
    block_key: str
    block_size: int
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    pair_counts: PairCounts

    def metric(self, name: str) -> Optional[float]:
        return getattr(self, name)


def _pairs(n: int) -> int:
    return n * (n - 1) // 2


def ratio(numerator: int, denominator: int) -> Optional[Fraction]:
    if denominator == 0:
        return None
    return Fraction(numerator, denominator)


def harmonic_mean(p: Optional[Fraction], r: Optional[Fraction]) -> Optional[Fraction]:
    if p is None or r is None or p + r == 0:
        return None
    return 2 * p * r / (p + r)


def as_float(value: Optional[Fraction]) -> Optional[float]:
    return None if value is None else float(value)


def pair_counts(clustering: Clustering, labels: MatchedLabels,
                block: Iterable[int]) -> PairCounts:
    """Exact pair counts through the cluster/author contingency table."""
    predicted = Counter()
    truth = Counter()
    cells = Counter()
    for mention_id in block:
        author = labels.truth.get(mention_id)
        if author is None:
            raise MetricInputError(f"mention {mention_id} has no truth label")
        cluster = clustering.cluster_of(mention_id)
        if cluster is None:
            raise MetricInputError(f"mention {mention_id} is not clustered by {clustering.method_id}")
        predicted[cluster] += 1
        truth[author] += 1
        cells[(cluster, author)] += 1

    return PairCounts(
        predicted=sum(_pairs(n) for n in predicted.values()),
        truth=sum(_pairs(n) for n in truth.values()),
        intersection=sum(_pairs(n) for n in cells.values()),
    )


def pairwise_prf(clustering: Clustering, labels: MatchedLabels, block: Sequence[int],
                 block_key: str = "") -> BlockScore:
    counts = pair_counts(clustering, labels, block)
    precision = ratio(counts.intersection, counts.predicted)
    recall = ratio(counts.intersection, counts.truth)
    return BlockScore(
        block_key=block_key,
        block_size=len(block),
        precision=as_float(precision),
        recall=as_float(recall),
        f1=as_float(harmonic_mean(precision, recall)),
        pair_counts=counts,
    )
