from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from networkx.utils import UnionFind

from corpus_ingest.errors import LineError
from name_model.names import AuthorMention


class PubType(str, Enum):
    JOURNAL_ARTICLE = "journal_article"
    CONFERENCE_PAPER = "conference_paper"
    OTHER = "other"


PUB_TYPE_BY_ELEMENT = {
    "article": PubType.JOURNAL_ARTICLE,
    "inproceedings": PubType.CONFERENCE_PAPER,
}


def pub_type_for(element_kind: str) -> PubType:
    return PUB_TYPE_BY_ELEMENT.get(element_kind, PubType.OTHER)


@dataclass(frozen=True)
class PublicationRecord:
    record_key: str
    pub_type: PubType
    year: Optional[int]
    title_raw: str
    venue: Optional[str]
    author_names: Tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "record_key": self.record_key,
            "pub_type": self.pub_type.value,
            "year": self.year,
            "title_raw": self.title_raw,
            "venue": self.venue,
            "author_names": list(self.author_names),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PublicationRecord":
        return cls(
            record_key=data["record_key"],
            pub_type=PubType(data["pub_type"]),
            year=data["year"],
            title_raw=data["title_raw"],
            venue=data["venue"],
            author_names=tuple(data["author_names"]),
        )


@dataclass
class IngestCounts:
    records_read: int = 0
    records_kept: int = 0
    records_dropped_by_type: Dict[str, int] = field(default_factory=dict)
    unknown_kinds: Dict[str, int] = field(default_factory=dict)
    empty_author_names: int = 0

    def drop(self, kind: str, known: bool = True):
        self.records_dropped_by_type[kind] = self.records_dropped_by_type.get(kind, 0) + 1
        if not known:
            self.unknown_kinds[kind] = self.unknown_kinds.get(kind, 0) + 1

    def to_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_kept": self.records_kept,
            "records_dropped_by_type": dict(sorted(self.records_dropped_by_type.items())),
            "unknown_kinds": dict(sorted(self.unknown_kinds.items())),
            "empty_author_names": self.empty_author_names,
        }


class CorpusStore:
    """Read-only view over ingested records and their author mentions."""

    def __init__(self, records: List[PublicationRecord], mentions: List[AuthorMention],
                 counts: IngestCounts):
        self._records: Mapping[str, PublicationRecord] = MappingProxyType(
            {record.record_key: record for record in records}
        )
        if len(self._records) != len(records):
            raise ValueError("duplicate record_key in corpus")
        self._mentions: Tuple[AuthorMention, ...] = tuple(mentions)
        self._counts = counts

        by_record: Dict[str, List[int]] = {}
        for mention in self._mentions:
            record = self._records.get(mention.record_key)
            if record is None or not 1 <= mention.position <= len(record.author_names):
                raise ValueError(f"mention {mention.mention_id} has no valid record/position")
            by_record.setdefault(mention.record_key, []).append(mention.mention_id)
        self._by_record = {key: tuple(ids) for key, ids in by_record.items()}
        self._by_name: Optional[Dict[str, Tuple[int, ...]]] = None

    @property
    def records(self) -> Mapping[str, PublicationRecord]:
        return self._records

    @property
    def mentions(self) -> Tuple[AuthorMention, ...]:
        return self._mentions

    @property
    def counts(self) -> IngestCounts:
        return self._counts

    def record(self, record_key: str) -> Optional[PublicationRecord]:
        return self._records.get(record_key)

    def mention(self, mention_id: int) -> AuthorMention:
        # mention ids are dense and assigned in order
        return self._mentions[mention_id]

    def mentions_of(self, record_key: str) -> Tuple[AuthorMention, ...]:
        return tuple(self._mentions[i] for i in self._by_record.get(record_key, ()))

    def mention_at(self, record_key: str, position: int) -> Optional[AuthorMention]:
        for mention in self.mentions_of(record_key):
            if mention.position == position:
                return mention
        return None

    def mentions_named(self, raw_name: str) -> Tuple[int, ...]:
        if self._by_name is None:
            index: Dict[str, List[int]] = {}
            for mention in self._mentions:
                index.setdefault(mention.raw_name, []).append(mention.mention_id)
            self._by_name = {name: tuple(ids) for name, ids in index.items()}
        return self._by_name.get(raw_name, ())

    def __len__(self):
        return len(self._records)


@dataclass(frozen=True)
class SynonymSet:
    pairs: FrozenSet[Tuple[str, str]]
    errors: Tuple[LineError, ...] = ()

    def __post_init__(self):
        consolidated = UnionFind()
        for a, b in sorted(self.pairs):
            consolidated.union(a, b)
        # Smallest member names the set, so roots do not depend on insertion order
        roots = {}
        for members in consolidated.to_sets():
            root = min(members)
            for name in members:
                roots[name] = root
        object.__setattr__(self, "_roots", roots)

    def root(self, name: str) -> str:
        return self._roots.get(name, name)

    def partition(self) -> List[Tuple[str, ...]]:
        groups: Dict[str, List[str]] = {}
        for name, root in self._roots.items():
            groups.setdefault(root, []).append(name)
        return sorted(tuple(sorted(members)) for members in groups.values())

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class OrcidLinkage:
    links: Mapping[int, str]
    rejected_orcids: int = 0
    conflicts: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()
    errors: Tuple[LineError, ...] = ()

    @property
    def distinct_orcids(self) -> int:
        return len(set(self.links.values()))


@dataclass(frozen=True)
class CitationGraph:
    edges: FrozenSet[Tuple[str, str]]
    self_loops: int = 0
    duplicates: int = 0
    unresolved_endpoints: int = 0
    unresolved_edges: int = 0
    errors: Tuple[LineError, ...] = ()

    def resolved_edges(self, corpus: CorpusStore) -> List[Tuple[str, str]]:
        return [
            (citing, cited)
            for citing, cited in sorted(self.edges)
            if corpus.record(citing) is not None and corpus.record(cited) is not None
        ]

    def __len__(self):
        return len(self.edges)


class DatasetOrigin(str, Enum):
    MANUAL = "manual"
    EXTERNAL_AUTHORITY = "external_authority"
    AUTOMATIC = "automatic"


@dataclass(frozen=True)
class LabeledEntry:
    truth_author_id: str
    raw_name: str
    title: str
    year: Optional[int]
    venue: Optional[str] = None
    author_position: Optional[int] = None


@dataclass(frozen=True)
class LabeledSourceDataset:
    entries: Tuple[LabeledEntry, ...]
    origin: DatasetOrigin = DatasetOrigin.MANUAL
    name: str = "labeled"
    errors: Tuple[LineError, ...] = ()

    @property
    def distinct_authors(self) -> int:
        return len({entry.truth_author_id for entry in self.entries})

    def __len__(self):
        return len(self.entries)
