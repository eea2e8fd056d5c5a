import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import pandas as pd

from corpus_ingest.models import CorpusStore, SynonymSet
from name_model.names import (
    AuthorMention,
    EmptyNameError,
    all_initials_key,
    blocking_key,
    parse_name,
)

logger = logging.getLogger(__name__)


class BaselineScheme(str, Enum):
    ALL_INITIALS = "all_initials"
    FIRST_INITIAL = "first_initial"


DBLP_METHOD = "dblp"
METHODS = (DBLP_METHOD, BaselineScheme.ALL_INITIALS.value, BaselineScheme.FIRST_INITIAL.value)


@dataclass(frozen=True)
class Clustering:
    assignment: Mapping[int, str]
    method_id: str
    excluded: Tuple[int, ...] = ()

    def cluster_of(self, mention_id: int) -> Optional[str]:
        return self.assignment.get(mention_id)

    def clusters(self) -> Dict[str, List[int]]:
        grouped: Dict[str, List[int]] = {}
        for mention_id, cluster_id in sorted(self.assignment.items()):
            grouped.setdefault(cluster_id, []).append(mention_id)
        return grouped

    def restricted_to(self, mention_ids: Iterable[int]) -> "Clustering":
        keep = set(mention_ids)
        return Clustering(
            assignment={m: c for m, c in self.assignment.items() if m in keep},
            method_id=self.method_id,
            excluded=tuple(m for m in self.excluded if m in keep),
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            sorted(self.assignment.items()), columns=["mention_id", "cluster_id"]
        )

    def to_csv(self, path: str):
        self.to_frame().to_csv(path, index=False, lineterminator="\n")


def dblp_native_clustering(corpus: CorpusStore, synonyms: Optional[SynonymSet] = None,
                           mentions: Optional[Iterable[AuthorMention]] = None) -> Clustering:
    """DBLP's own author identities: suffix-inclusive name strings joined by synonym pairs."""
    synonyms = synonyms or SynonymSet(pairs=frozenset())
    selected = corpus.mentions if mentions is None else mentions
    assignment = {m.mention_id: synonyms.root(m.raw_name) for m in selected}
    return Clustering(assignment=dict(sorted(assignment.items())), method_id=DBLP_METHOD)


def baseline_clustering(mentions: Iterable[AuthorMention], scheme=BaselineScheme.ALL_INITIALS,
                        strip_suffix: bool = True) -> Clustering:
    scheme = BaselineScheme(scheme)
    key_fn = all_initials_key if scheme is BaselineScheme.ALL_INITIALS else blocking_key

    assignment: Dict[int, str] = {}
    excluded: List[int] = []
    for mention in mentions:
        try:
            name = parse_name(mention.raw_name)
        except EmptyNameError:
            excluded.append(mention.mention_id)
            continue
        cluster_id = str(key_fn(name))
        if not strip_suffix and name.homonym_suffix:
            cluster_id = f"{cluster_id} {name.homonym_suffix}"
        assignment[mention.mention_id] = cluster_id

    if excluded:
        logger.warning("%s baseline excluded %d unparseable mentions", scheme.value, len(excluded))
    return Clustering(
        assignment=dict(sorted(assignment.items())),
        method_id=scheme.value,
        excluded=tuple(sorted(excluded)),
    )


def run_method(method_id: str, corpus: CorpusStore, mentions: Iterable[AuthorMention],
               synonyms: Optional[SynonymSet] = None, strip_suffix: bool = True) -> Clustering:
    if method_id == DBLP_METHOD:
        return dblp_native_clustering(corpus, synonyms, mentions)
    return baseline_clustering(mentions, method_id, strip_suffix=strip_suffix)
