"""Pre-tokenization: regex chunking and count aggregation.

Text is split into pre-token chunks by the GPT-4 pre-tokenizer pattern,
and chunk counts are aggregated over a corpus into a :class:`PretokenTable`,
which is the sole input to every trainer.

The production chunker compiles the pattern with the ``regex`` engine
(possessive quantifiers and Unicode classes are required). An independent
hand-written backtracking matcher for the same pattern lives in
:mod:`tokscale.reference` and is used for differential testing.
"""

from __future__ import annotations

import multiprocessing
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import regex

from .errors import CountOverflowError, FormatError, IngestError
from .escape import escape_bytes, unescape_bytes

# Canonical GPT-4 pattern: apostrophe-bearing contraction branch. The
# apostrophe-free variant drops the leading "'" and is kept only for
# ablation; it chops leading s/d/m/t/ll/ve/re off ordinary words.
GPT4_PATTERN = (
    r"'(?i:[sdmt]|ll|ve|re)"
    r"|[^\r\n\p{L}\p{N}]?+\p{L}+"
    r"|\p{N}{1,3}"
    r"| ?[^\s\p{L}\p{N}]++[\r\n]*"
    r"|\s*[\r\n]"
    r"|\s+(?!\S)"
    r"|\s+"
)
GPT4_PATTERN_NO_APOSTROPHE = GPT4_PATTERN[1:]

_MAX_COUNT = 2**63 - 1

_compiled: dict[str, "regex.Pattern[str]"] = {}


def _pattern(pattern: str) -> "regex.Pattern[str]":
    pat = _compiled.get(pattern)
    if pat is None:
        pat = _compiled[pattern] = regex.compile(pattern)
    return pat


def chunk(text: str, pattern: str = GPT4_PATTERN) -> list[bytes]:
    """Split ``text`` into pre-token chunks (UTF-8 byte sequences).

    Every input byte belongs to exactly one chunk; concatenating the
    chunks reproduces the input.
    """
    return [m.encode("utf-8") for m in _pattern(pattern).findall(text)]


@dataclass
class PretokenTable:
    """Aggregated chunk counts over a corpus."""

    entries: dict[bytes, int] = field(default_factory=dict)
    total_count: int = 0
    total_bytes: int = 0

    @classmethod
    def from_counts(cls, counts: dict[bytes, int]) -> "PretokenTable":
        total_count = sum(counts.values())
        total_bytes = sum(c * len(b) for b, c in counts.items())
        return cls(dict(counts), total_count, total_bytes)

    def add(self, chunk_bytes: bytes, count: int = 1) -> None:
        new = self.entries.get(chunk_bytes, 0) + count
        if new > _MAX_COUNT:
            raise CountOverflowError(f"count overflow for chunk {chunk_bytes!r}")
        self.entries[chunk_bytes] = new
        self.total_count += count
        self.total_bytes += count * len(chunk_bytes)

    def sorted_items(self) -> list[tuple[bytes, int]]:
        """Entries in canonical (lexicographic byte) order."""
        return sorted(self.entries.items())

    def __len__(self) -> int:
        return len(self.entries)


def merge_tables(a: PretokenTable, b: PretokenTable) -> PretokenTable:
    """Pointwise count addition; commutative and associative."""
    if len(b.entries) > len(a.entries):
        a, b = b, a
    merged = dict(a.entries)
    for k, c in b.entries.items():
        new = merged.get(k, 0) + c
        if new > _MAX_COUNT:
            raise CountOverflowError(f"count overflow for chunk {k!r}")
        merged[k] = new
    total_count = a.total_count + b.total_count
    total_bytes = a.total_bytes + b.total_bytes
    if total_count > _MAX_COUNT or total_bytes > _MAX_COUNT:
        raise CountOverflowError("table totals overflow")
    return PretokenTable(merged, total_count, total_bytes)


_worker_pattern = GPT4_PATTERN


def _init_worker(pattern: str) -> None:
    global _worker_pattern
    _worker_pattern = pattern
    _pattern(pattern)


def _count_batch(texts: list[str]) -> Counter:
    counts: Counter = Counter()
    pat = _pattern(_worker_pattern)
    for text in texts:
        counts.update(pat.findall(text))
    return counts


def count_corpus(
    docs: Iterable,
    workers: int = 1,
    pattern: str = GPT4_PATTERN,
    batch_chars: int = 4_000_000,
) -> PretokenTable:
    """Chunk every document and aggregate counts per unique chunk.

    The result is independent of ``workers`` and of processing order.
    ``docs`` yields objects with ``id`` and ``text`` attributes (or plain
    strings).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def batches() -> Iterator[list[tuple[str, str]]]:
        batch: list[tuple[str, str]] = []
        size = 0
        for doc in docs:
            if isinstance(doc, str):
                ident, text = "", doc
            else:
                ident, text = doc.id, doc.text
            batch.append((ident, text))
            size += len(text)
            if size >= batch_chars:
                yield batch
                batch, size = [], 0
        if batch:
            yield batch

    def checked_texts(batch: list[tuple[str, str]]) -> list[str]:
        out = []
        for ident, text in batch:
            try:
                text.encode("utf-8")
            except UnicodeEncodeError as exc:
                raise IngestError(f"document {ident!r}: not encodable as UTF-8: {exc}")
            out.append(text)
        return out

    counts: Counter = Counter()
    if workers == 1:
        pat = _pattern(pattern)
        for batch in batches():
            for text in checked_texts(batch):
                counts.update(pat.findall(text))
    else:
        with multiprocessing.Pool(workers, initializer=_init_worker, initargs=(pattern,)) as pool:
            for part in pool.imap(_count_batch, (checked_texts(b) for b in batches()), chunksize=1):
                counts.update(part)
    return PretokenTable.from_counts({s.encode("utf-8"): c for s, c in counts.items()})


# ---------------------------------------------------------------------------
# Table file format: a header line carrying totals, then one
# "<escaped-chunk>\t<count>" line per entry, sorted by raw chunk bytes.

_TABLE_MAGIC = "#pretoken-table"


def write_table(table: PretokenTable, fp: IO[str]) -> None:
    fp.write(
        f"{_TABLE_MAGIC}\tentries={len(table.entries)}"
        f"\ttotal_count={table.total_count}\ttotal_bytes={table.total_bytes}\n"
    )
    for chunk_bytes, count in table.sorted_items():
        fp.write(f"{escape_bytes(chunk_bytes)}\t{count}\n")


def read_table(fp: IO[str]) -> PretokenTable:
    header = fp.readline().rstrip("\n")
    parts = header.split("\t")
    if not parts or parts[0] != _TABLE_MAGIC:
        raise FormatError("not a pretoken table file")
    meta = dict(p.split("=", 1) for p in parts[1:])
    entries: dict[bytes, int] = {}
    total_count = 0
    total_bytes = 0
    for lineno, line in enumerate(fp, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            escaped, count_str = line.split("\t")
            count = int(count_str)
        except ValueError:
            raise FormatError(f"malformed table line {lineno}")
        chunk_bytes = unescape_bytes(escaped)
        if count < 1:
            raise FormatError(f"non-positive count at line {lineno}")
        if chunk_bytes in entries:
            raise FormatError(f"duplicate chunk at line {lineno}")
        entries[chunk_bytes] = count
        total_count += count
        total_bytes += count * len(chunk_bytes)
    table = PretokenTable(entries, total_count, total_bytes)
    if int(meta.get("entries", -1)) != len(entries) or int(
        meta.get("total_count", -1)
    ) != total_count or int(meta.get("total_bytes", -1)) != total_bytes:
        raise FormatError("table header totals do not match entries")
    return table


def save_table(table: PretokenTable, path) -> None:
    import os

    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fp:
        write_table(table, fp)
    os.replace(tmp, path)


def load_table(path) -> PretokenTable:
    with open(path, "r", encoding="utf-8", newline="\n") as fp:
        return read_table(fp)
