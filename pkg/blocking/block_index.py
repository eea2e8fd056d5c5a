import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from name_model.names import (
    AuthorMention,
    BlockKey,
    EmptyNameError,
    InitialsKey,
    ParsedName,
    all_initials_key,
    blocking_key,
    parse_name,
)

logger = logging.getLogger(__name__)

KeyFunction = Callable[[ParsedName], Union[BlockKey, InitialsKey]]

KEY_FUNCTIONS: Dict[str, KeyFunction] = {
    "first_initial": blocking_key,
    "all_initials": all_initials_key,
}


@dataclass(frozen=True)
class BlockIndex:
    blocks: Mapping[str, Tuple[int, ...]]
    key_fn_id: str
    rejects: Tuple[Tuple[int, str], ...] = ()

    def __post_init__(self):
        lookup = {}
        for key, members in self.blocks.items():
            for mention_id in members:
                lookup[mention_id] = key
        object.__setattr__(self, "_lookup", lookup)

    def block_of(self, mention_id: int) -> Optional[str]:
        return self._lookup.get(mention_id)

    def sizes(self) -> List[int]:
        return [len(members) for members in self.blocks.values()]

    @property
    def mention_count(self) -> int:
        return len(self._lookup)

    def __len__(self):
        return len(self.blocks)


def build_blocks(mentions: Iterable[AuthorMention], key_fn: Union[str, KeyFunction] = "first_initial",
                 key_fn_id: Optional[str] = None) -> BlockIndex:
    if isinstance(key_fn, str):
        key_fn_id = key_fn_id or key_fn
        key_fn = KEY_FUNCTIONS[key_fn]
    key_fn_id = key_fn_id or getattr(key_fn, "__name__", "custom")

    grouped: Dict[str, List[int]] = {}
    rejects: List[Tuple[int, str]] = []
    for mention in mentions:
        try:
            key = str(key_fn(parse_name(mention.raw_name)))
        except EmptyNameError as exc:
            rejects.append((mention.mention_id, str(exc)))
            continue
        grouped.setdefault(key, []).append(mention.mention_id)

    if rejects:
        logger.warning("%d mentions could not be keyed and were rejected", len(rejects))
    blocks = {key: tuple(sorted(grouped[key])) for key in sorted(grouped)}
    return BlockIndex(blocks=blocks, key_fn_id=key_fn_id, rejects=tuple(sorted(rejects)))


@dataclass(frozen=True)
class SizeRow:
    block_size: int
    block_count: int
    cumulative_ratio: float
    mention_count: int
    cumulative_mention_ratio: float


@dataclass(frozen=True)
class SizeDistribution:
    rows: Tuple[SizeRow, ...]

    def ratio_at(self, block_size: int) -> float:
        """Cumulative block ratio for blocks of at most `block_size` mentions."""
        ratio = 0.0
        for row in self.rows:
            if row.block_size > block_size:
                break
            ratio = row.cumulative_ratio
        return ratio

    def to_frame(self, include_mentions: bool = False) -> pd.DataFrame:
        columns = ["size", "count", "cumulative_ratio"]
        if include_mentions:
            columns += ["mention_count", "cumulative_mention_ratio"]
        data = [
            (row.block_size, row.block_count, row.cumulative_ratio,
             row.mention_count, row.cumulative_mention_ratio)
            for row in self.rows
        ]
        frame = pd.DataFrame(
            data, columns=["size", "count", "cumulative_ratio",
                           "mention_count", "cumulative_mention_ratio"],
        )
        return frame[columns]

    def to_csv(self, path: str, include_mentions: bool = False):
        self.to_frame(include_mentions).to_csv(path, index=False, lineterminator="\n")


def block_size_distribution(index: BlockIndex) -> SizeDistribution:
    return size_distribution(index.sizes())


def size_distribution(block_sizes: Iterable[int]) -> SizeDistribution:
    sizes = np.fromiter(block_sizes, dtype=np.int64)
    if sizes.size == 0:
        return SizeDistribution(rows=())

    values, counts = np.unique(sizes, return_counts=True)
    mentions = values * counts
    cumulative_blocks = np.cumsum(counts)
    cumulative_mentions = np.cumsum(mentions)
    total_blocks = int(cumulative_blocks[-1])
    total_mentions = int(cumulative_mentions[-1])

    rows = []
    for i, size in enumerate(values):
        rows.append(SizeRow(
            block_size=int(size),
            block_count=int(counts[i]),
            cumulative_ratio=int(cumulative_blocks[i]) / total_blocks,
            mention_count=int(mentions[i]),
            cumulative_mention_ratio=int(cumulative_mentions[i]) / total_mentions,
        ))
    return SizeDistribution(rows=tuple(rows))
