import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from corpus_ingest.dblp_parser import ingest_dblp  # noqa: E402
from corpus_ingest.models import CorpusStore, IngestCounts, PublicationRecord, PubType  # noqa: E402
from name_model.names import AuthorMention  # noqa: E402

DATA_DIR = os.path.join(ROOT, "data")


def data_path(name):
    return os.path.join(DATA_DIR, name)


def make_corpus(records):
    """Build a CorpusStore from (record_key, [author names]) pairs."""
    kept = []
    mentions = []
    for record_key, names in records:
        kept.append(PublicationRecord(
            record_key=record_key, pub_type=PubType.JOURNAL_ARTICLE, year=2020,
            title_raw=f"Title of {record_key}", venue="Venue", author_names=tuple(names),
        ))
        for position, name in enumerate(names, start=1):
            mentions.append(AuthorMention(len(mentions), record_key, position, name))
    counts = IngestCounts(records_read=len(kept), records_kept=len(kept))
    return CorpusStore(kept, mentions, counts)


@pytest.fixture(scope="session")
def golden_corpus():
    return ingest_dblp(data_path("dblp_golden.xml"))
