import logging
from collections import Counter
from typing import Dict, Set

from blocking.block_index import BlockIndex
from corpus_ingest.models import CorpusStore, OrcidLinkage
from labeling.labels import MatchedLabels, MatchStats
from name_model.names import EmptyNameError, parse_name

logger = logging.getLogger(__name__)

ORCID_TAG = "orcid"
HOMONYM_TAG = "orcid_homonym"
SYNONYM_TAG = "orcid_synonym"

MATCH_ON_DISPLAY_NAME = "display_name"
MATCH_ON_BLOCK_KEY = "block_key"


def build_orcid_labels(corpus: CorpusStore, links: OrcidLinkage) -> MatchedLabels:
    truth = {
        mention_id: orcid
        for mention_id, orcid in sorted(links.links.items())
        if 0 <= mention_id < len(corpus.mentions)
    }
    stats = MatchStats(entries_in=len(truth), entries_matched=len(truth))
    return MatchedLabels(truth=truth, source_tag=ORCID_TAG, match_stats=stats)


def _display_names(labels: MatchedLabels, corpus: CorpusStore) -> Dict[int, str]:
    names = {}
    for mention_id in labels.truth:
        try:
            names[mention_id] = parse_name(corpus.mention(mention_id).raw_name).display_name
        except EmptyNameError:
            continue
    return names


def _block_authors(labels: MatchedLabels, blocks: BlockIndex) -> Dict[str, Set[str]]:
    authors: Dict[str, Set[str]] = {}
    for mention_id, author in labels.truth.items():
        key = blocks.block_of(mention_id)
        if key is not None:
            authors.setdefault(key, set()).add(author)
    return authors


def _name_counts(names: Dict[int, str], blocks: BlockIndex) -> Counter:
    # display names are compared within a block; equal strings always share one
    return Counter((blocks.block_of(m), name) for m, name in names.items())


def extract_orcid_homonym_subset(labels: MatchedLabels, corpus: CorpusStore, blocks: BlockIndex,
                                 match_on: str = MATCH_ON_DISPLAY_NAME) -> MatchedLabels:
    """Mentions whose name is shared with another labeled mention in a multi-author block."""
    names = _display_names(labels, corpus)
    authors = _block_authors(labels, blocks)
    name_counts = _name_counts(names, blocks)
    block_sizes = Counter(blocks.block_of(m) for m in names)

    kept = []
    for mention_id, name in names.items():
        key = blocks.block_of(mention_id)
        if key is None or len(authors.get(key, ())) < 2:
            continue
        if match_on == MATCH_ON_BLOCK_KEY:
            shares_name = block_sizes[key] >= 2
        else:
            shares_name = name_counts[(key, name)] >= 2
        if shares_name:
            kept.append(mention_id)

    subset = labels.restricted_to(kept, HOMONYM_TAG)
    logger.info("ORCID homonym subset: %d mentions, %d authors", len(subset), subset.distinct_authors)
    return subset


def extract_orcid_synonym_subset(labels: MatchedLabels, corpus: CorpusStore, blocks: BlockIndex,
                                 synonym_only: bool = True) -> MatchedLabels:
    """Mentions with a block-unique name string inside a single-author block."""
    names = _display_names(labels, corpus)
    authors = _block_authors(labels, blocks)
    name_counts = _name_counts(names, blocks)

    kept = []
    for mention_id, name in names.items():
        key = blocks.block_of(mention_id)
        if key is None or len(authors.get(key, ())) != 1:
            continue
        if name_counts[(key, name)] == 1:
            kept.append(mention_id)

    if synonym_only:
        variants: Dict[str, Set[str]] = {}
        for mention_id in kept:
            variants.setdefault(labels.truth[mention_id], set()).add(names[mention_id])
        kept = [m for m in kept if len(variants[labels.truth[m]]) >= 2]

    subset = labels.restricted_to(kept, SYNONYM_TAG)
    logger.info("ORCID synonym subset: %d mentions, %d authors", len(subset), subset.distinct_authors)
    return subset
