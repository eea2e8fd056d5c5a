import functools
import gzip
import io
import random

import pytest
from lxml import etree

from conftest import data_path
from corpus_ingest import dblp_parser
from corpus_ingest.dblp_parser import (
    CorpusBuilder,
    EntityResolver,
    default_entity_table,
    ingest_dblp,
    iter_person_records,
    load_entity_table,
    record_from_element,
    store_from_lines,
    store_to_lines,
)
from corpus_ingest.errors import IngestError
from corpus_ingest.models import PubType
from corpus_ingest.sources import iter_lines, iter_text_chunks
from name_model.names import parse_name


def _dump(body: str) -> bytes:
    return ('<?xml version="1.0" encoding="ISO-8859-1"?>\n'
            '<!DOCTYPE dblp SYSTEM "dblp.dtd">\n<dblp>\n' + body + "</dblp>\n").encode("utf-8")


def test_golden_counts(golden_corpus):
    counts = golden_corpus.counts
    assert counts.records_read == 20
    assert counts.records_kept == 12
    assert counts.records_dropped_by_type == {"book": 5, "phdthesis": 3}
    assert counts.unknown_kinds == {}
    assert counts.empty_author_names == 0
    assert len(golden_corpus.mentions) == 23


def test_golden_records_and_positions(golden_corpus):
    record = golden_corpus.record("journals/tc/Liu20")
    assert record.pub_type is PubType.JOURNAL_ARTICLE
    assert record.year == 2020
    assert record.venue == "IEEE Trans. Computers"
    assert record.author_names == ("Bin Liu 0001", "Jürgen Müller")

    inproc = golden_corpus.record("conf/kdd/WangL19")
    assert inproc.pub_type is PubType.CONFERENCE_PAPER
    assert inproc.venue == "KDD"
    assert [(m.position, m.raw_name) for m in golden_corpus.mentions_of("conf/kdd/WangL19")] == [
        (1, "Wei Wang"), (2, "Bin Liu"),
    ]
    assert golden_corpus.record("books/sp/Mueller10") is None


def test_golden_mention_ids_follow_document_order(golden_corpus):
    ids = [m.mention_id for m in golden_corpus.mentions]
    assert ids == list(range(23))
    assert golden_corpus.mention(0).raw_name == "Bin Liu 0001"
    assert golden_corpus.mention(22).raw_name == "Ana Gómez"


def test_golden_has_one_homonym_suffix(golden_corpus):
    suffixed = [m for m in golden_corpus.mentions if parse_name(m.raw_name).homonym_suffix]
    assert len(suffixed) == 1
    assert parse_name(suffixed[0].raw_name).homonym_suffix == "0001"


def test_entities_and_raw_utf8_agree(golden_corpus):
    assert golden_corpus.mention(19).raw_name == "José Gómez"
    assert golden_corpus.mention(21).raw_name == "José Gómez"


def test_inline_markup_is_flattened(golden_corpus):
    assert golden_corpus.record("journals/jacm/MullerZ15").title_raw == "Lower Bounds for Sorting."


def test_reparse_serializes_identically():
    first = "\n".join(store_to_lines(ingest_dblp(data_path("dblp_golden.xml"))))
    second = "\n".join(store_to_lines(ingest_dblp(data_path("dblp_golden.xml"))))
    assert first == second


def test_store_round_trip(golden_corpus, tmp_path):
    builder = CorpusBuilder(data_dir=str(tmp_path))
    builder.save_store(golden_corpus, "corpus.jsonl")
    loaded = builder.load_store("corpus.jsonl")
    assert list(store_to_lines(loaded)) == list(store_to_lines(golden_corpus))
    assert loaded.counts.to_dict() == golden_corpus.counts.to_dict()


def test_store_from_lines_skips_blank_lines(golden_corpus):
    lines = list(store_to_lines(golden_corpus))
    loaded = store_from_lines(lines[:1] + [""] + lines[1:])
    assert len(loaded) == 12


def test_stream_and_bytes_agree():
    with open(data_path("dblp_golden.xml"), "rb") as f:
        raw = f.read()
    from_stream = ingest_dblp(io.BytesIO(raw))
    from_bytes = ingest_dblp(raw)
    assert list(store_to_lines(from_stream)) == list(store_to_lines(from_bytes))


def _whole_document(raw: bytes, pub_types=("article", "inproceedings")):
    """Parse the dump in one piece: records and (record, position, name) mentions."""
    resolver = EntityResolver(default_entity_table())
    text = resolver.feed(0, raw.decode("utf-8")) + resolver.close()
    parser = etree.XMLParser(load_dtd=False, resolve_entities=False, no_network=True)
    root = etree.fromstring(text.encode("utf-8"), parser)
    records = [record_from_element(elem, elem.tag) for elem in root if elem.tag in pub_types]
    mentions = [
        (record.record_key, position, name)
        for record in records
        for position, name in enumerate(record.author_names, start=1)
        if name
    ]
    return records, mentions


def _random_dump(rng) -> bytes:
    names = ["Ren&eacute; Lee", "José Gómez", "Jos&eacute; G&oacute;mez", "Bin Liu 0001",
             "Wei Wang", "J&uuml;rgen M&uuml;ller", "Ann &amp; Bo", "Zo&euml; Kravitz"]
    kinds = ["article", "inproceedings", "inproceedings", "book", "phdthesis", "www"]
    body = []
    for i in range(rng.randint(1, 40)):
        kind = rng.choice(kinds)
        authors = "".join(f"<author>{rng.choice(names)}</author>" for _ in range(rng.randint(0, 4)))
        venue = "<journal>J. Big&ouml;</journal>" if kind == "article" else "<booktitle>Conf</booktitle>"
        body.append(
            f'<{kind} mdate="2020-01-01" key="k/{i}">{authors}'
            f'<title>On <i>T</i>&iacute;tle {i}.</title>{venue}<year>{rng.randint(1990, 2020)}</year>'
            f"</{kind}>\n"
        )
    return _dump("".join(body))


def test_streaming_matches_whole_document_parse(monkeypatch):
    with open(data_path("dblp_golden.xml"), "rb") as f:
        dumps = [f.read()]
    rng = random.Random(41)
    dumps += [_random_dump(rng) for _ in range(25)]

    for raw in dumps:
        chunk_size = rng.randint(1, 64)
        monkeypatch.setattr(dblp_parser, "iter_text_chunks",
                            functools.partial(iter_text_chunks, chunk_size=chunk_size))
        corpus = ingest_dblp(raw)
        records, mentions = _whole_document(raw)
        assert list(corpus.records.values()) == records
        assert [(m.record_key, m.position, m.raw_name) for m in corpus.mentions] == mentions


def test_gzip_input_detected():
    with open(data_path("dblp_golden.xml"), "rb") as f:
        raw = f.read()
    corpus = ingest_dblp(gzip.compress(raw))
    assert corpus.counts.records_kept == 12


def test_pub_type_filter():
    corpus = ingest_dblp(data_path("dblp_golden.xml"), pub_types=("article",))
    assert corpus.counts.records_kept == 6
    assert corpus.counts.records_dropped_by_type["inproceedings"] == 6


def test_unknown_kind_is_counted():
    corpus = ingest_dblp(_dump('<mystery key="x/1"><author>A B</author></mystery>\n'))
    assert corpus.counts.records_read == 1
    assert corpus.counts.unknown_kinds == {"mystery": 1}
    assert corpus.counts.records_dropped_by_type == {"mystery": 1}


def test_empty_author_is_skipped_but_counted():
    corpus = ingest_dblp(_dump(
        '<article key="a/1"><author>  </author><author>Ann Lee</author>'
        '<title>T.</title><year>2000</year></article>\n'
    ))
    assert corpus.counts.empty_author_names == 1
    assert [(m.position, m.raw_name) for m in corpus.mentions] == [(2, "Ann Lee")]


def test_undeclared_entity_names_the_entity():
    with pytest.raises(IngestError) as info:
        ingest_dblp(_dump('<article key="a/1"><author>A &bogus; B</author></article>\n'))
    assert info.value.entity == "bogus"


def test_undeclared_entity_offset_is_a_source_offset():
    raw = _dump('<article key="a/1"><author>Ren&eacute; &bogus; B</author></article>\n')
    with pytest.raises(IngestError) as info:
        ingest_dblp(raw)
    assert info.value.byte_offset == raw.index(b"&bogus;")


def _mismatched(header_encoding: str, accent: str) -> bytes:
    return (
        f'<?xml version="1.0" encoding="{header_encoding}"?>\n<dblp>\n'
        f'<article key="a/1"><author>Ren{accent} Roy</author><title>T.</title></article>\n'
        '<article key="a/2">\n<author>A B</title>\n</article>\n</dblp>\n'
    ).encode("utf-8")


def test_malformed_xml_reports_offset():
    plain = _mismatched("UTF-8", "&#233;")
    rewritten = _mismatched("ISO-8859-1", "&eacute;")
    with pytest.raises(IngestError) as plain_info:
        ingest_dblp(plain)
    with pytest.raises(IngestError) as rewritten_info:
        ingest_dblp(rewritten)

    plain_at = plain_info.value.byte_offset
    rewritten_at = rewritten_info.value.byte_offset
    bad_line = plain.rfind(b"\n", 0, plain.index(b"</title>\n</article>"))
    assert plain.rfind(b"\n", 0, plain_at) == bad_line
    # longer encoding name (+5) and named entity (+2) sit before the error
    assert rewritten_at - plain_at == 7
    assert rewritten[rewritten_at:rewritten_at + 8] == plain[plain_at:plain_at + 8]


def test_entity_resolver_maps_offsets_back_to_source():
    source = '<?xml version="1.0" encoding="ISO-8859-1"?><a>&eacute;&amp;&Auml;Z</a>'
    resolver = EntityResolver({"eacute": 233, "Auml": 196})
    out = resolver.feed(0, source) + resolver.close()
    assert out == '<?xml version="1.0" encoding="UTF-8"?><a>&#233;&amp;&#196;Z</a>'
    assert resolver.source_offset(out.index("Z")) == source.index("Z")
    assert resolver.source_offset(out.index("<a>")) == source.index("<a>")
    assert resolver.emitted == len(out)


def test_chunk_offsets_start_at_carried_bytes():
    data = "aé".encode("utf-8") * 4
    chunks = list(iter_text_chunks(io.BytesIO(data), chunk_size=2))
    for offset, text in chunks:
        assert data[offset:].decode("utf-8").startswith(text)
    assert "".join(text for _, text in chunks) == "aé" * 4


def test_invalid_utf8_reports_offset():
    raw = _dump('<article key="a/1"><author>A B</author></article>\n')
    bad_at = raw.index(b"A B")
    broken = raw[:bad_at] + b"\xff" + raw[bad_at + 1:]
    with pytest.raises(IngestError) as info:
        ingest_dblp(broken)
    assert info.value.byte_offset == bad_at

def test_invalid_utf8_offset_across_chunks():
    data = "é".encode("utf-8") * 10 + b"\xff"
    with pytest.raises(IngestError) as info:
        list(iter_text_chunks(io.BytesIO(data), chunk_size=3))
    assert info.value.byte_offset == 20

def test_duplicate_record_key_is_fatal():
    with pytest.raises(IngestError):
        ingest_dblp(_dump(
            '<article key="a/1"><author>A B</author></article>\n'
            '<article key="a/1"><author>C D</author></article>\n'
        ))

def test_entity_resolver_handles_split_references():
    resolver = EntityResolver({"ouml": 246})
    text = resolver.feed(0, "M&ou") + resolver.feed(4, "ml;ller") + resolver.close()
    assert text == "M&#246;ller"

def test_load_entity_table(tmp_path):
    dtd = tmp_path / "dblp.dtd"
    dtd.write_text('<!ENTITY Auml "&#196;" >\n<!ENTITY reg "&#x00AE;">\n', encoding="utf-8")
    assert load_entity_table(str(dtd)) == {"Auml": 196, "reg": 174}

def test_person_records():
    raw = _dump(
        '<www key="homepages/n/Newman"><author>Mark E. J. Newman</author>'
        '<author>M. E. J. Newman</author><title>Home Page</title>'
        '<url>https://orcid.org/0000-0001-5555-5554</url></www>\n'
        '<www key="www/org/acm"><title>ACM</title></www>\n'
    )
    people = list(iter_person_records(raw))
    assert len(people) == 1
    assert people[0].names == ("Mark E. J. Newman", "M. E. J. Newman")
    assert people[0].urls == ("https://orcid.org/0000-0001-5555-5554",)

def test_iter_lines_numbers_lines():
    lines = list(iter_lines(b"a\tb\r\n\nc\td"))
    assert lines == [(1, "a\tb"), (2, ""), (3, "c\td")]
