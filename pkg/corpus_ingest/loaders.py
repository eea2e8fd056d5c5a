import json
import logging
import re
from typing import Dict, List, Optional, Set, Tuple

import networkx as nx
import pandas as pd

from corpus_ingest.dblp_parser import iter_person_records
from corpus_ingest.errors import IngestError, LineError
from corpus_ingest.models import (
    CitationGraph,
    CorpusStore,
    DatasetOrigin,
    LabeledEntry,
    LabeledSourceDataset,
    OrcidLinkage,
    SynonymSet,
)
from corpus_ingest.sources import Source, iter_lines, source_name

logger = logging.getLogger(__name__)

ORCID_PATTERN = re.compile(r"^\d{4}-\d{4}-\d{4}-\d{3}[\dX]$")
ORCID_URL = re.compile(r"orcid\.org/(\d{4}-\d{4}-\d{4}-\d{3}[\dXx])")

LABELED_COLUMNS = ("author_id", "name", "title", "year", "venue", "position")
MANDATORY_COLUMNS = ("author_id", "name")


def _split_pair_line(line: str) -> List[str]:
    return [field.strip() for field in line.split("\t")]


def load_synonym_pairs(source: Source) -> SynonymSet:
    pairs: Set[Tuple[str, str]] = set()
    errors: List[LineError] = []
    for line_number, line in iter_lines(source):
        if not line.strip():
            continue
        fields = _split_pair_line(line)
        if len(fields) != 2 or not all(fields):
            errors.append(LineError(line_number, f"expected 2 fields, got {len(fields)}"))
            continue
        a, b = fields
        pairs.add((a, b) if a <= b else (b, a))

    if errors:
        logger.warning("Skipped %d malformed synonym lines in %s", len(errors), source_name(source))
    logger.info("Loaded %d synonym pairs", len(pairs))
    return SynonymSet(pairs=frozenset(pairs), errors=tuple(errors))


def orcid_check_digit(base_digits: str) -> str:
    """ISO 7064 MOD 11-2 check character over the first 15 digits."""
    total = 0
    for digit in base_digits:
        total = (total + int(digit)) * 2
    result = (12 - total % 11) % 11
    return "X" if result == 10 else str(result)


def is_valid_orcid(orcid: str) -> bool:
    if not ORCID_PATTERN.match(orcid):
        return False
    digits = orcid.replace("-", "")
    return orcid_check_digit(digits[:15]) == digits[15]


class _NameOrcidMap:
    """Collects name -> ORCID claims and flags names claimed by two ORCIDs."""

    def __init__(self):
        self.claims: Dict[str, Set[str]] = {}
        self.rejected = 0

    def claim(self, name: str, orcid: str) -> bool:
        orcid = orcid.upper()
        if not is_valid_orcid(orcid):
            self.rejected += 1
            return False
        self.claims.setdefault(name, set()).add(orcid)
        return True

    def resolved(self) -> Tuple[Dict[str, str], List[Tuple[str, Tuple[str, ...]]]]:
        mapping = {}
        conflicts = []
        for name, orcids in sorted(self.claims.items()):
            if len(orcids) == 1:
                mapping[name] = next(iter(orcids))
            else:
                conflicts.append((name, tuple(sorted(orcids))))
        return mapping, conflicts


def load_orcid_links(corpus: CorpusStore, mapping: Optional[Source] = None,
                     person_records: Optional[Source] = None,
                     entity_table: Optional[Dict[str, int]] = None) -> OrcidLinkage:
    """Link mentions to ORCIDs by their suffix-inclusive name string.

    `person_records` is a dump stream whose homepage records carry orcid.org
    URLs; `mapping` is an orcid<TAB>name file. A name resolved by the mapping
    file wins over the same name scraped from person records.
    """
    errors: List[LineError] = []
    rejected = 0
    conflicts: List[Tuple[str, Tuple[str, ...]]] = []
    name_to_orcid: Dict[str, str] = {}

    if person_records is not None:
        scraped = _NameOrcidMap()
        for person in iter_person_records(person_records, entity_table):
            for url in person.urls:
                match = ORCID_URL.search(url)
                if match:
                    for name in person.names:
                        scraped.claim(name, match.group(1))
        found, clashes = scraped.resolved()
        name_to_orcid.update(found)
        conflicts.extend(clashes)
        rejected += scraped.rejected

    if mapping is not None:
        explicit = _NameOrcidMap()
        for line_number, line in iter_lines(mapping):
            if not line.strip():
                continue
            fields = _split_pair_line(line)
            if len(fields) != 2 or not all(fields):
                errors.append(LineError(line_number, f"expected 2 fields, got {len(fields)}"))
                continue
            orcid, name = fields
            if not explicit.claim(name, orcid):
                errors.append(LineError(line_number, f"invalid ORCID {orcid!r}"))
        found, clashes = explicit.resolved()
        for name, _ in clashes:
            name_to_orcid.pop(name, None)
        name_to_orcid.update(found)
        conflicts = [c for c in conflicts if c[0] not in found] + clashes
        rejected += explicit.rejected

    links: Dict[int, str] = {}
    for name, orcid in sorted(name_to_orcid.items()):
        for mention_id in corpus.mentions_named(name):
            links[mention_id] = orcid

    logger.info("Linked %d mentions to %d ORCIDs (%d rejected, %d conflicting names)",
                len(links), len(set(links.values())), rejected, len(conflicts))
    return OrcidLinkage(
        links=dict(sorted(links.items())),
        rejected_orcids=rejected,
        conflicts=tuple(sorted(conflicts)),
        errors=tuple(errors),
    )


def _iter_citation_pairs(source: Source, fmt: str, errors: List[LineError]):
    if fmt == "edge_list":
        for line_number, line in iter_lines(source):
            if not line.strip():
                continue
            fields = _split_pair_line(line)
            if len(fields) != 2 or not all(fields):
                errors.append(LineError(line_number, f"expected 2 fields, got {len(fields)}"))
                continue
            yield fields[0], fields[1]
    elif fmt == "record_json_lines":
        for line_number, line in iter_lines(source):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                record_id = item["id"]
                references = item.get("references") or []
                if not isinstance(record_id, str) or not isinstance(references, list):
                    raise TypeError("id must be a string and references a list")
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                errors.append(LineError(line_number, f"malformed record: {exc}"))
                continue
            for cited in references:
                if isinstance(cited, str) and cited:
                    yield record_id, cited
                else:
                    errors.append(LineError(line_number, f"bad reference {cited!r}"))
    else:
        raise ValueError(f"unknown citation format: {fmt}")


def load_citation_graph(source: Source, fmt: str = "edge_list",
                        corpus: Optional[CorpusStore] = None) -> CitationGraph:
    errors: List[LineError] = []
    graph = nx.DiGraph()
    self_loops = 0
    duplicates = 0
    for citing, cited in _iter_citation_pairs(source, fmt, errors):
        if citing == cited:
            self_loops += 1
        elif graph.has_edge(citing, cited):
            duplicates += 1
        else:
            graph.add_edge(citing, cited)

    unresolved_endpoints = 0
    unresolved_edges = 0
    if corpus is not None:
        unresolved = {node for node in graph.nodes if corpus.record(node) is None}
        unresolved_endpoints = len(unresolved)
        unresolved_edges = sum(
            1 for citing, cited in graph.edges if citing in unresolved or cited in unresolved
        )

    logger.info("Loaded %d citation edges (%d duplicates, %d self-loops, %d unresolved endpoints)",
                graph.number_of_edges(), duplicates, self_loops, unresolved_endpoints)
    return CitationGraph(
        edges=frozenset(graph.edges),
        self_loops=self_loops,
        duplicates=duplicates,
        unresolved_endpoints=unresolved_endpoints,
        unresolved_edges=unresolved_edges,
        errors=tuple(errors),
    )


def _optional_int(value: str) -> Optional[int]:
    value = value.strip()
    if not value:
        return None
    try:
        return int(value)
    except ValueError:
        return None


def load_labeled_dataset(source: Source, name: str = "labeled",
                         origin: DatasetOrigin = DatasetOrigin.MANUAL) -> LabeledSourceDataset:
    """Read a tab-separated labeled dataset with a header row.

    Rows with more fields than the header are reported as LineErrors; short
    rows are padded with empty fields. Line numbers are physical file lines.
    """
    lines = [(number, line) for number, line in iter_lines(source) if line.strip()]
    if not lines:
        raise IngestError(f"labeled dataset {source_name(source)} is empty",
                          source=source_name(source))
    _, header = lines[0]
    columns = [column.strip().lower() for column in header.split("\t")]
    missing = [column for column in MANDATORY_COLUMNS if column not in columns]
    if missing:
        raise IngestError(f"labeled dataset {source_name(source)} lacks columns {missing}",
                          source=source_name(source))

    errors: List[LineError] = []
    rows: List[List[str]] = []
    line_numbers: List[int] = []
    for line_number, line in lines[1:]:
        fields = line.split("\t")
        if len(fields) > len(columns):
            errors.append(LineError(
                line_number, f"expected {len(columns)} fields, got {len(fields)}"))
            continue
        rows.append(fields + [""] * (len(columns) - len(fields)))
        line_numbers.append(line_number)

    frame = pd.DataFrame(rows, columns=columns, dtype=object)
    for column in LABELED_COLUMNS:
        if column not in frame.columns:
            frame[column] = ""

    entries = []
    for line_number, row in zip(line_numbers, frame[list(LABELED_COLUMNS)].itertuples(index=False)):
        author_id = row.author_id.strip()
        raw_name = row.name.strip()
        if not author_id or not raw_name:
            errors.append(LineError(line_number, "empty author_id or name"))
            continue
        if row.year.strip() and _optional_int(row.year) is None:
            errors.append(LineError(line_number, f"unparseable year {row.year!r}"))
        entries.append(LabeledEntry(
            truth_author_id=author_id,
            raw_name=raw_name,
            title=row.title.strip(),
            year=_optional_int(row.year),
            venue=row.venue.strip() or None,
            author_position=_optional_int(row.position),
        ))

    dataset = LabeledSourceDataset(entries=tuple(entries), origin=origin, name=name,
                                   errors=tuple(sorted(errors, key=lambda e: e.line_number)))
    logger.info("Loaded labeled dataset %s: %d entries, %d distinct authors, %d line errors",
                name, len(dataset), dataset.distinct_authors, len(errors))
    return dataset
