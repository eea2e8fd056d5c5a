import logging
from typing import Dict, List, Set, Tuple

from tqdm import tqdm

from corpus_ingest.models import CitationGraph, CorpusStore
from labeling.labels import PairLabels, canonical_pair
from name_model.names import EmptyNameError, blocking_key, parse_name

logger = logging.getLogger(__name__)

SELF_CITATION_TAG = "self_citation"


class SelfCitationMiner:
    """Pairs a name on a citing paper with the one same-keyed name on the cited paper."""

    def __init__(self, corpus: CorpusStore):
        self.corpus = corpus
        self._keys: Dict[str, Dict[str, List[int]]] = {}

    def keyed_mentions(self, record_key: str) -> Dict[str, List[int]]:
        cached = self._keys.get(record_key)
        if cached is None:
            cached = {}
            for mention in self.corpus.mentions_of(record_key):
                try:
                    key = blocking_key(parse_name(mention.raw_name)).key
                except EmptyNameError:
                    continue
                cached.setdefault(key, []).append(mention.mention_id)
            self._keys[record_key] = cached
        return cached

    def pairs_for_edge(self, citing: str, cited: str) -> List[Tuple[int, int]]:
        left = self.keyed_mentions(citing)
        right = self.keyed_mentions(cited)
        pairs = []
        for key, mentions in left.items():
            matches = right.get(key)
            # a name matching two or more names on the other paper is ambiguous
            if matches and len(mentions) == 1 and len(matches) == 1:
                pairs.append(canonical_pair(mentions[0], matches[0]))
        return pairs

    def mine(self, graph: CitationGraph) -> PairLabels:
        pairs: Set[Tuple[int, int]] = set()
        edges = graph.resolved_edges(self.corpus)
        unresolved = len(graph) - len(edges)
        for citing, cited in tqdm(edges, desc="self-citations", unit="edge", disable=None):
            pairs.update(self.pairs_for_edge(citing, cited))

        logger.info("Mined %d self-citation pairs from %d edges (%d unresolved skipped)",
                    len(pairs), len(edges), unresolved)
        return PairLabels(
            pairs=frozenset(pairs),
            source_tag=SELF_CITATION_TAG,
            stats={"edges_resolved": len(edges), "edges_unresolved": unresolved},
        )


def extract_self_citation_pairs(corpus: CorpusStore, graph: CitationGraph) -> PairLabels:
    return SelfCitationMiner(corpus).mine(graph)
