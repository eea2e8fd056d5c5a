import bisect
import html.entities
import json
import logging
import os
import re
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from lxml import etree

from corpus_ingest.errors import IngestError
from corpus_ingest.models import CorpusStore, IngestCounts, PublicationRecord, pub_type_for
from corpus_ingest.sources import Source, iter_text_chunks, open_source, source_name
from name_model.names import AuthorMention

logger = logging.getLogger(__name__)

DBLP_ELEMENTS = (
    "article",
    "inproceedings",
    "proceedings",
    "book",
    "incollection",
    "phdthesis",
    "mastersthesis",
    "www",
    "person",
    "data",
)

DEFAULT_PUB_TYPES = ("article", "inproceedings")
PROGRESS_INTERVAL = 100_000

XML_PREDEFINED = frozenset({"amp", "lt", "gt", "quot", "apos"})
ENTITY_REF = re.compile(r"&([A-Za-z_][A-Za-z0-9._-]*);")
DTD_ENTITY = re.compile(r'<!ENTITY\s+([A-Za-z_][\w.-]*)\s+"&#(x[0-9A-Fa-f]+|[0-9]+);"\s*>')
XML_DECL_ENCODING = re.compile(r'^(\s*<\?xml[^>]*?encoding\s*=\s*)(["\'])([^"\']*)\2')
# Longest named reference we are willing to hold back across a chunk boundary
MAX_ENTITY_LENGTH = 64


def default_entity_table() -> Dict[str, int]:
    """Named character entities declared by the public dblp.dtd (ISO Latin-1 and symbols)."""
    return dict(html.entities.name2codepoint)


def load_entity_table(path: str) -> Dict[str, int]:
    """Read `<!ENTITY name "&#N;">` declarations out of a DTD file."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    table = {}
    for name, ref in DTD_ENTITY.findall(text):
        table[name] = int(ref[1:], 16) if ref.startswith("x") else int(ref)
    if not table:
        raise IngestError(f"no entity declarations found in {path}", source=path)
    return table


class EntityResolver:
    """Rewrites DTD-declared named entities to numeric references, chunk by chunk.

    Rewrites change byte lengths, so the resolver keeps the source-minus-output
    delta at every point where it changed; `source_offset` maps a byte offset
    in the rewritten stream back to the source file.
    """

    def __init__(self, table: Dict[str, int], name: str = "<stream>"):
        self.table = table
        self.name = name
        self._pending = ""
        self._pending_offset = 0
        self._first = True
        self._emitted = 0
        self._marks: List[int] = []
        self._deltas: List[int] = []
        self._floor_delta = 0

    @property
    def emitted(self) -> int:
        return self._emitted

    def source_offset(self, emitted_offset: int) -> int:
        index = bisect.bisect_right(self._marks, emitted_offset)
        delta = self._deltas[index - 1] if index else self._floor_delta
        return emitted_offset + delta

    def forget(self, before: int):
        """Drop offset marks below `before`; the parser has accepted that output."""
        index = bisect.bisect_right(self._marks, before)
        if index:
            self._floor_delta = self._deltas[index - 1]
            del self._marks[:index]
            del self._deltas[:index]

    def _replacement(self, entity: Optional[str], original: str, source_at: int) -> str:
        if entity is None:
            return "UTF-8"
        if entity in XML_PREDEFINED:
            return original
        codepoint = self.table.get(entity)
        if codepoint is None:
            raise IngestError(
                f"undeclared character entity &{entity}; in {self.name} at byte {source_at}",
                byte_offset=source_at, entity=entity, source=self.name,
            )
        return f"&#{codepoint};"

    def _edits(self, text: str) -> Iterator[Tuple[int, int, Optional[str]]]:
        if self._first:
            self._first = False
            decl = XML_DECL_ENCODING.match(text)
            if decl and decl.group(3).upper() != "UTF-8":
                yield decl.start(3), decl.end(3), None
        for match in ENTITY_REF.finditer(text):
            yield match.start(), match.end(), match.group(1)

    def _rewrite(self, text: str, source_at: int) -> str:
        out: List[str] = []
        position = 0
        for start, end, entity in self._edits(text):
            plain = text[position:start].encode("utf-8")
            source_at += len(plain)
            self._emitted += len(plain)
            original = text[start:end]
            replacement = self._replacement(entity, original, source_at)
            out.append(text[position:start])
            out.append(replacement)
            source_len = len(original.encode("utf-8"))
            output_len = len(replacement.encode("utf-8"))
            source_at += source_len
            self._emitted += output_len
            if source_len != output_len:
                delta = (self._deltas[-1] if self._deltas else self._floor_delta)
                self._marks.append(self._emitted)
                self._deltas.append(delta + source_len - output_len)
            position = end
        tail = text[position:]
        out.append(tail)
        self._emitted += len(tail.encode("utf-8"))
        return "".join(out)

    def feed(self, offset: int, text: str) -> str:
        """Rewrite `text`, which starts at source byte `offset`."""
        if not self._pending:
            self._pending_offset = offset
        text = self._pending + text

        cut = len(text)
        amp = text.rfind("&")
        if amp != -1 and ";" not in text[amp:] and len(text) - amp < MAX_ENTITY_LENGTH:
            cut = amp
        ready, self._pending = text[:cut], text[cut:]
        base = self._pending_offset
        self._pending_offset = base + len(ready.encode("utf-8"))
        return self._rewrite(ready, base)

    def close(self) -> str:
        tail, self._pending = self._pending, ""
        return self._rewrite(tail, self._pending_offset)


def flatten_text(node) -> str:
    return "".join(node.itertext())


def _clean(text: Optional[str]) -> str:
    return " ".join(text.split()) if text else ""


def _syntax_error(exc: etree.XMLSyntaxError, name: str, chunk_offset: int,
                  chunk: bytes, lines_before: int, to_source=None) -> IngestError:
    """Turn libxml2's (line, column) into a byte offset.

    Columns count characters, so the error line is decoded to find the byte
    position. `to_source` maps rewritten-stream offsets back to the file.
    """
    line, column = exc.position if exc.position else (0, 0)
    offset = chunk_offset
    newline_index = -1
    for _ in range(max(0, line - 1 - lines_before)):
        newline_index = chunk.find(b"\n", newline_index + 1)
        if newline_index == -1:
            break
    if line - 1 >= lines_before and (newline_index != -1 or line - 1 == lines_before):
        line_bytes = chunk[newline_index + 1:].split(b"\n", 1)[0]
        prefix = line_bytes.decode("utf-8", errors="replace")[:max(column - 1, 0)]
        offset = chunk_offset + newline_index + 1 + len(prefix.encode("utf-8"))
    if to_source is not None:
        offset = to_source(offset)
    return IngestError(
        f"malformed XML in {name} at byte {offset} (line {line}, column {column}): {exc.msg}",
        byte_offset=offset, source=name,
    )


def iter_top_level(source: Source, entity_table: Optional[Dict[str, int]] = None
                   ) -> Iterator[Tuple[str, "etree._Element"]]:
    """Stream (element kind, element) for every child of the dump's root element.

    Each element is cleared once the consumer asks for the next one, so memory
    stays bounded by the largest single record.
    """
    name = source_name(source)
    resolver = EntityResolver(entity_table or default_entity_table(), name)
    parser = etree.XMLPullParser(
        events=("end",), load_dtd=False, resolve_entities=False,
        no_network=True, huge_tree=True,
    )
    fed_offset = 0
    lines_before = 0
    previous_start = 0
    # (chunk bytes, its output offset, newlines before it) of the last non-empty feed
    last_chunk = (b"", 0, 0)

    def fail(exc: etree.XMLSyntaxError, chunk: bytes, chunk_offset: int, lines: int) -> IngestError:
        return _syntax_error(exc, name, chunk_offset, chunk, lines, resolver.source_offset)

    def feed(data: bytes):
        nonlocal fed_offset, lines_before, last_chunk
        try:
            parser.feed(data)
        except etree.XMLSyntaxError as exc:
            raise fail(exc, data, fed_offset, lines_before) from exc
        if data:
            last_chunk = (data, fed_offset, lines_before)
        fed_offset += len(data)
        lines_before += data.count(b"\n")

    def drain():
        try:
            for _, elem in parser.read_events():
                parent = elem.getparent()
                if parent is None or parent.getparent() is not None:
                    continue
                yield elem.tag, elem
                elem.clear()
                while elem.getprevious() is not None:
                    del parent[0]
        except etree.XMLSyntaxError as exc:
            raise fail(exc, *last_chunk) from exc

    with open_source(source) as stream:
        for offset, text in iter_text_chunks(stream, name):
            # errors surface in the chunk being fed or the one before it
            resolver.forget(previous_start)
            previous_start = fed_offset
            feed(resolver.feed(offset, text).encode("utf-8"))
            yield from drain()
        feed(resolver.close().encode("utf-8"))
        yield from drain()
        try:
            parser.close()
        except etree.XMLSyntaxError as exc:
            raise fail(exc, *last_chunk) from exc


def _parse_year(text: str) -> Optional[int]:
    try:
        return int(text)
    except ValueError:
        return None


def record_from_element(elem, kind: str) -> PublicationRecord:
    authors: List[str] = []
    title = ""
    year = None
    journal = None
    booktitle = None
    for child in elem:
        tag = child.tag
        if tag == "author":
            authors.append(_clean(flatten_text(child)))
        elif tag == "title":
            title = _clean(flatten_text(child))
        elif tag == "year":
            year = _parse_year(_clean(flatten_text(child)))
        elif tag == "journal":
            journal = _clean(flatten_text(child)) or None
        elif tag == "booktitle":
            booktitle = _clean(flatten_text(child)) or None

    return PublicationRecord(
        record_key=elem.get("key", ""),
        pub_type=pub_type_for(kind),
        year=year,
        title_raw=title,
        venue=journal or booktitle,
        author_names=tuple(authors),
    )


@dataclass(frozen=True)
class PersonRecord:
    key: str
    names: Tuple[str, ...]
    urls: Tuple[str, ...]


def iter_person_records(source: Source, entity_table: Optional[Dict[str, int]] = None
                        ) -> Iterator[PersonRecord]:
    """DBLP person pages: `www` records keyed under homepages/."""
    for kind, elem in iter_top_level(source, entity_table):
        if kind != "www" or not elem.get("key", "").startswith("homepages/"):
            continue
        names = tuple(_clean(flatten_text(c)) for c in elem if c.tag == "author")
        urls = tuple(_clean(flatten_text(c)) for c in elem if c.tag == "url")
        yield PersonRecord(key=elem.get("key"), names=names, urls=urls)


class CorpusBuilder:
    def __init__(self, pub_types: Sequence[str] = DEFAULT_PUB_TYPES,
                 entity_table: Optional[Dict[str, int]] = None, data_dir: str = "data"):
        self.pub_types = frozenset(pub_types)
        self.entity_table = entity_table or default_entity_table()
        self.data_dir = data_dir

    def ingest(self, source: Source) -> CorpusStore:
        counts = IngestCounts()
        records: List[PublicationRecord] = []
        mentions: List[AuthorMention] = []
        seen_keys = set()

        for kind, elem in iter_top_level(source, self.entity_table):
            counts.records_read += 1
            if counts.records_read % PROGRESS_INTERVAL == 0:
                logger.info("Read %d records (%d kept)", counts.records_read, counts.records_kept)

            if kind not in self.pub_types:
                counts.drop(kind, known=kind in DBLP_ELEMENTS)
                continue

            record = record_from_element(elem, kind)
            if not record.record_key or record.record_key in seen_keys:
                raise IngestError(
                    f"missing or duplicate record key {record.record_key!r} in {source_name(source)}",
                    source=source_name(source),
                )
            seen_keys.add(record.record_key)
            records.append(record)
            counts.records_kept += 1

            for position, raw_name in enumerate(record.author_names, start=1):
                if not raw_name:
                    counts.empty_author_names += 1
                    continue
                mentions.append(AuthorMention(len(mentions), record.record_key, position, raw_name))

        logger.info(
            "Ingested %s: %d read, %d kept, dropped %s",
            source_name(source), counts.records_read, counts.records_kept,
            counts.records_dropped_by_type,
        )
        return CorpusStore(records, mentions, counts)

    def save_store(self, store: CorpusStore, filename: str) -> str:
        filepath = os.path.join(self.data_dir, filename)
        with open(filepath, "w", encoding="utf-8", newline="\n") as f:
            for line in store_to_lines(store):
                f.write(line + "\n")
        return filepath

    def load_store(self, filename: str) -> CorpusStore:
        filepath = os.path.join(self.data_dir, filename)
        with open(filepath, "r", encoding="utf-8") as f:
            return store_from_lines(f)


def store_to_lines(store: CorpusStore) -> Iterator[str]:
    yield json.dumps({"counts": store.counts.to_dict()}, sort_keys=True, ensure_ascii=False)
    for record in store.records.values():
        by_position = {m.position: m.mention_id for m in store.mentions_of(record.record_key)}
        line = record.to_dict()
        line["mention_ids"] = [by_position.get(p) for p in range(1, len(record.author_names) + 1)]
        yield json.dumps({"record": line}, sort_keys=True, ensure_ascii=False)


def store_from_lines(lines) -> CorpusStore:
    counts = IngestCounts()
    records: List[PublicationRecord] = []
    mentions: Dict[int, AuthorMention] = {}
    for line in lines:
        if not line.strip():
            continue
        item = json.loads(line)
        if "counts" in item:
            raw = item["counts"]
            counts = IngestCounts(
                records_read=raw["records_read"],
                records_kept=raw["records_kept"],
                records_dropped_by_type=dict(raw["records_dropped_by_type"]),
                unknown_kinds=dict(raw["unknown_kinds"]),
                empty_author_names=raw["empty_author_names"],
            )
            continue
        data = item["record"]
        record = PublicationRecord.from_dict(data)
        records.append(record)
        for position, mention_id in enumerate(data["mention_ids"], start=1):
            if mention_id is not None:
                mentions[mention_id] = AuthorMention(
                    mention_id, record.record_key, position, record.author_names[position - 1]
                )
    return CorpusStore(records, [mentions[i] for i in sorted(mentions)], counts)


def ingest_dblp(source: Source, pub_types: Sequence[str] = DEFAULT_PUB_TYPES,
                entity_table: Optional[Dict[str, int]] = None) -> CorpusStore:
    return CorpusBuilder(pub_types=pub_types, entity_table=entity_table).ingest(source)
