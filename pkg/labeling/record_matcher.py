import logging
from dataclasses import asdict
from typing import Dict, List, Tuple

from tqdm import tqdm

from corpus_ingest.models import CorpusStore, LabeledEntry, LabeledSourceDataset
from labeling.labels import (
    AmbiguityItem,
    AmbiguityReport,
    CandidateMatch,
    MatchedLabels,
    MatchStats,
)
from name_model.names import (
    EmptyNameError,
    ParsedName,
    names_compatible,
    normalize_key_text,
    normalize_title,
    normalize_venue,
    parse_name,
)

logger = logging.getLogger(__name__)


def _agrees(left, right):
    """None when either side is absent; otherwise equality."""
    if left is None or right is None:
        return None
    return left == right


class RecordMatcher:
    """Matches labeled entries to corpus mentions via a normalized-title index."""

    def __init__(self, corpus: CorpusStore):
        self.corpus = corpus
        self._title_index: Dict[str, List[str]] = {}
        for record in corpus.records.values():
            title = normalize_title(record.title_raw)
            if title:
                self._title_index.setdefault(title, []).append(record.record_key)

    def candidates(self, entry: LabeledEntry) -> List[CandidateMatch]:
        title = normalize_title(entry.title)
        if not title:
            return []
        try:
            entry_name = parse_name(entry.raw_name)
        except EmptyNameError:
            return []
        entry_venue = normalize_venue(entry.venue) if entry.venue else None

        found = []
        for record_key in self._title_index.get(title, ()):
            record = self.corpus.record(record_key)
            year = _agrees(entry.year, record.year)
            if year is False:
                continue
            record_venue = normalize_venue(record.venue) if record.venue else None
            venue = _agrees(entry_venue, record_venue)
            if venue is False:
                continue

            if entry.author_position is not None:
                mention = self.corpus.mention_at(record_key, entry.author_position)
                mentions = [mention] if mention is not None else []
            else:
                mentions = list(self.corpus.mentions_of(record_key))

            for mention in mentions:
                try:
                    name = parse_name(mention.raw_name)
                except EmptyNameError:
                    continue
                if not names_compatible(entry_name, name):
                    continue
                found.append(CandidateMatch(
                    record_key=record_key,
                    mention_id=mention.mention_id,
                    field_agreement={
                        "title": True,
                        "year": year,
                        "venue": venue,
                        "position": True if entry.author_position is not None else None,
                        "name_exact": self._same_name(entry_name, name),
                    },
                ))
        return found

    @staticmethod
    def _same_name(a: ParsedName, b: ParsedName) -> bool:
        return normalize_key_text(a.display_name) == normalize_key_text(b.display_name)

    @staticmethod
    def _resolve(candidates: List[CandidateMatch]):
        best = max(c.agreeing_fields for c in candidates)
        leaders = [c for c in candidates if c.agreeing_fields == best]
        return leaders[0] if len(leaders) == 1 else None

    def match(self, dataset: LabeledSourceDataset,
              resolve_ambiguous: bool = False) -> Tuple[MatchedLabels, AmbiguityReport]:
        stats = MatchStats(entries_in=len(dataset.entries))
        truth: Dict[int, str] = {}
        items: List[AmbiguityItem] = []

        for index, entry in enumerate(tqdm(dataset.entries, desc=f"match {dataset.name}",
                                           unit="entry", disable=None)):
            candidates = self.candidates(entry)
            chosen = None
            if len(candidates) == 1:
                chosen = candidates[0]
            elif len(candidates) > 1 and resolve_ambiguous:
                chosen = self._resolve(candidates)
                if chosen is not None:
                    stats.auto_resolved += 1

            if len(candidates) > 1 and chosen is None:
                stats.ambiguous_count += 1
                items.append(AmbiguityItem(
                    entry_index=index, entry=asdict(entry), candidates=tuple(candidates),
                ))
            elif chosen is None:
                stats.unmatched_count += 1
            elif chosen.mention_id in truth:
                stats.unmatched_count += 1
                stats.duplicate_count += 1
            else:
                truth[chosen.mention_id] = entry.truth_author_id
                stats.entries_matched += 1

        logger.info(
            "Matched %d of %d %s entries (%d ambiguous, %d unmatched)",
            stats.entries_matched, stats.entries_in, dataset.name,
            stats.ambiguous_count, stats.unmatched_count,
        )
        labels = MatchedLabels(truth=dict(sorted(truth.items())), source_tag=dataset.name,
                               match_stats=stats)
        return labels, AmbiguityReport(items=tuple(items))


def match_labeled_records(dataset: LabeledSourceDataset, corpus: CorpusStore,
                          resolve_ambiguous: bool = False) -> Tuple[MatchedLabels, AmbiguityReport]:
    return RecordMatcher(corpus).match(dataset, resolve_ambiguous=resolve_ambiguous)
