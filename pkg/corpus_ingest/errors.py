from dataclasses import dataclass
from typing import Optional


class IngestError(Exception):
    """Fatal ingest failure. Carries the byte offset or entity name when known."""

    def __init__(self, message: str, byte_offset: Optional[int] = None,
                 entity: Optional[str] = None, source: Optional[str] = None):
        super().__init__(message)
        self.byte_offset = byte_offset
        self.entity = entity
        self.source = source

    def to_record(self) -> dict:
        return {
            "error": "ingest",
            "message": str(self),
            "byte_offset": self.byte_offset,
            "entity": self.entity,
            "source": self.source,
        }


@dataclass(frozen=True)
class LineError:
    line_number: int
    message: str
