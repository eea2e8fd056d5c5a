import codecs
import gzip
import io
import os
from contextlib import contextmanager
from typing import BinaryIO, Iterator, List, Tuple, Union

from corpus_ingest.errors import IngestError

GZIP_MAGIC = b"\x1f\x8b"
CHUNK_SIZE = 1 << 20

Source = Union[str, os.PathLike, BinaryIO, bytes]


@contextmanager
def open_source(source: Source) -> Iterator[BinaryIO]:
    """Open a path, bytes or binary stream, transparently un-gzipping it."""
    if isinstance(source, (bytes, bytearray)):
        stream: BinaryIO = io.BytesIO(source)
        owned = True
    elif isinstance(source, (str, os.PathLike)):
        stream = open(source, "rb")
        owned = True
    else:
        stream = source
        owned = False

    try:
        if _starts_with(stream, GZIP_MAGIC):
            yield gzip.GzipFile(fileobj=stream, mode="rb")
        else:
            yield stream
    finally:
        if owned:
            stream.close()


def _starts_with(stream: BinaryIO, prefix: bytes) -> bool:
    if hasattr(stream, "peek"):
        return stream.peek(len(prefix))[:len(prefix)] == prefix
    if stream.seekable():
        start = stream.tell()
        head = stream.read(len(prefix))
        stream.seek(start)
        return head == prefix
    return False


def source_name(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return os.fspath(source)
    return getattr(source, "name", "<stream>")


def iter_text_chunks(stream: BinaryIO, name: str = "<stream>",
                     chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[int, str]]:
    """Yield (byte offset, decoded text) chunks, failing on invalid UTF-8."""
    decoder = codecs.getincrementaldecoder("utf-8")(errors="strict")
    offset = 0
    while True:
        raw = stream.read(chunk_size)
        final = not raw
        # bytes of a split sequence carried over from the previous chunk
        carried = len(decoder.getstate()[0])
        try:
            text = decoder.decode(raw, final=final)
        except UnicodeDecodeError as exc:
            bad = offset - carried + exc.start
            raise IngestError(
                f"invalid UTF-8 in {name} at byte {bad}", byte_offset=bad, source=name,
            ) from exc
        if text:
            yield offset - carried, text
        if final:
            return
        offset += len(raw)


def iter_lines(source: Source) -> Iterator[Tuple[int, str]]:
    """Yield (1-based line number, line without newline) from a UTF-8 source."""
    name = source_name(source)
    with open_source(source) as stream:
        pending = ""
        line_number = 0
        for _, text in iter_text_chunks(stream, name):
            pending += text
            lines: List[str] = pending.split("\n")
            pending = lines.pop()
            for line in lines:
                line_number += 1
                yield line_number, line.rstrip("\r")
        if pending:
            yield line_number + 1, pending.rstrip("\r")
