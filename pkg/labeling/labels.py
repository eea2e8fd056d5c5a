import json
from dataclasses import asdict, dataclass, field
from typing import FrozenSet, Iterable, Mapping, Optional, Tuple

import pandas as pd


@dataclass
class MatchStats:
    entries_in: int = 0
    entries_matched: int = 0
    ambiguous_count: int = 0
    unmatched_count: int = 0
    # entries whose only candidate mention was already labeled by an earlier entry
    duplicate_count: int = 0
    auto_resolved: int = 0

    @property
    def match_ratio(self) -> Optional[float]:
        if self.entries_in == 0:
            return None
        return self.entries_matched / self.entries_in

    def to_dict(self) -> dict:
        data = asdict(self)
        data["match_ratio"] = self.match_ratio
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "MatchStats":
        return cls(**{k: v for k, v in data.items() if k != "match_ratio"})


@dataclass(frozen=True)
class MatchedLabels:
    truth: Mapping[int, str]
    source_tag: str
    match_stats: MatchStats = field(default_factory=MatchStats)

    @property
    def mention_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(self.truth))

    @property
    def distinct_authors(self) -> int:
        return len(set(self.truth.values()))

    def restricted_to(self, mention_ids: Iterable[int], source_tag: str) -> "MatchedLabels":
        keep = set(mention_ids)
        return MatchedLabels(
            truth={m: a for m, a in sorted(self.truth.items()) if m in keep},
            source_tag=source_tag,
            match_stats=self.match_stats,
        )

    def to_frame(self) -> pd.DataFrame:
        rows = [(m, a, self.source_tag) for m, a in sorted(self.truth.items())]
        return pd.DataFrame(rows, columns=["mention_id", "truth_author_id", "source_tag"])

    def to_csv(self, path: str):
        self.to_frame().to_csv(path, index=False, lineterminator="\n")

    def __len__(self):
        return len(self.truth)


@dataclass(frozen=True)
class CandidateMatch:
    record_key: str
    mention_id: int
    field_agreement: Mapping[str, Optional[bool]]

    @property
    def agreeing_fields(self) -> int:
        return sum(1 for agrees in self.field_agreement.values() if agrees)


# Why an entry stayed ambiguous
AMBIGUOUS_RECORDS = "multiple_records"
AMBIGUOUS_AUTHORS = "multiple_authors_on_record"


@dataclass(frozen=True)
class AmbiguityItem:
    entry_index: int
    entry: Mapping[str, object]
    candidates: Tuple[CandidateMatch, ...]

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise ValueError("an ambiguity needs at least two candidates")

    @property
    def candidate_records(self) -> Tuple[str, ...]:
        return tuple(sorted({c.record_key for c in self.candidates}))

    @property
    def reason(self) -> str:
        if len(self.candidate_records) > 1:
            return AMBIGUOUS_RECORDS
        return AMBIGUOUS_AUTHORS


@dataclass(frozen=True)
class AmbiguityReport:
    items: Tuple[AmbiguityItem, ...] = ()

    def to_json_lines(self) -> str:
        lines = []
        for item in self.items:
            lines.append(json.dumps({
                "entry_index": item.entry_index,
                "entry": dict(item.entry),
                "reason": item.reason,
                "candidate_records": list(item.candidate_records),
                "candidates": [
                    {
                        "record_key": c.record_key,
                        "mention_id": c.mention_id,
                        "field_agreement": dict(c.field_agreement),
                    }
                    for c in item.candidates
                ],
            }, sort_keys=True, ensure_ascii=False))
        return "".join(line + "\n" for line in lines)

    def write(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_json_lines())

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class PairLabels:
    pairs: FrozenSet[Tuple[int, int]]
    source_tag: str
    stats: Mapping[str, int] = field(default_factory=dict)

    def mention_ids(self) -> Tuple[int, ...]:
        return tuple(sorted({m for pair in self.pairs for m in pair}))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(sorted(self.pairs), columns=["mention_id_a", "mention_id_b"])

    def to_csv(self, path: str):
        self.to_frame().to_csv(path, index=False, lineterminator="\n")

    def __len__(self):
        return len(self.pairs)


def canonical_pair(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)

