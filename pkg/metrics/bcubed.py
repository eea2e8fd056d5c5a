import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from disambiguators.clustering import Clustering
from labeling.labels import MatchedLabels
from metrics.pairwise import MetricInputError


@dataclass(frozen=True)
class BCubedScore:
    precision: float
    recall: float
    f1: Optional[float]
    mentions: int


def bcubed_prf(clustering: Clustering, labels: MatchedLabels,
               universe: Iterable[int]) -> BCubedScore:
    """Mention-averaged B-Cubed over the whole universe, regardless of blocks.

    For a mention in predicted cluster C and truth cluster T, precision is
    |C & T| / |C| and recall |C & T| / |T|; summing those per mention equals
    summing n_ct^2 / n_c (resp. n_ct^2 / n_t) over contingency cells.
    """
    predicted = Counter()
    truth = Counter()
    cells = Counter()
    total = 0
    for mention_id in sorted(set(universe)):
        author = labels.truth.get(mention_id)
        if author is None:
            raise MetricInputError(f"mention {mention_id} has no truth label")
        cluster = clustering.cluster_of(mention_id)
        if cluster is None:
            raise MetricInputError(f"mention {mention_id} is not clustered by {clustering.method_id}")
        predicted[cluster] += 1
        truth[author] += 1
        cells[(cluster, author)] += 1
        total += 1

    if total == 0:
        raise MetricInputError("B-Cubed needs a non-empty universe")

    # integer numerators per cluster; one division per cluster
    squares_by_cluster = Counter()
    squares_by_author = Counter()
    for (cluster, author), n in cells.items():
        squares_by_cluster[cluster] += n * n
        squares_by_author[author] += n * n
    precision = math.fsum(s / predicted[c] for c, s in squares_by_cluster.items()) / total
    recall = math.fsum(s / truth[a] for a, s in squares_by_author.items()) / total
    f1 = None if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return BCubedScore(
        precision=precision,
        recall=recall,
        f1=f1,
        mentions=total,
    )
