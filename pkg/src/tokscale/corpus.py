"""Corpus ingestion, deduplication, cumulative slices and holdout split.

Documents are the unit of shuffling, deduplication and slicing; a slice
boundary never splits a document. The shuffle is a Fisher-Yates
permutation driven by Python's seeded Mersenne Twister
(``random.Random(seed).shuffle``), so a (documents, schedule, seed)
triple fully determines every manifest.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import FormatError, IngestError, InsufficientDataError

PLAIN_LINES = "plain-lines"
JSON_LINES = "json-lines"


@dataclass(frozen=True)
class Document:
    id: str
    text: str

    def byte_len(self) -> int:
        return len(self.text.encode("utf-8"))


@dataclass(frozen=True)
class Slice:
    label: str
    target_bytes: int
    achieved_bytes: int
    doc_range: tuple[int, int]  # half-open interval into the shuffled order
    content_hash: str


@dataclass
class SliceManifest:
    seed: int
    slices: list[Slice]
    order: list[str]  # document ids in shuffled order

    def documents_for(self, slice_index: int, docs_by_id: dict[str, Document]) -> list[Document]:
        lo, hi = self.slices[slice_index].doc_range
        return [docs_by_id[i] for i in self.order[lo:hi]]


def _doc_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _decode_file(path: str) -> str:
    try:
        with open(path, "rb") as fp:
            raw = fp.read()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}")
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"{path}: invalid UTF-8 at byte offset {exc.start}")


def ingest(
    paths: Sequence[str],
    format: str = PLAIN_LINES,
    dedup: bool = False,
) -> Iterator[Document]:
    """Yield documents from ``paths`` in file order.

    ``plain-lines``: one document per line. ``json-lines``: one JSON
    object per line with a string ``text`` field. With ``dedup``, a
    document whose full-text digest was already seen is skipped.
    """
    if format not in (PLAIN_LINES, JSON_LINES):
        raise ValueError(f"unknown format {format!r}")
    seen: set[str] = set()
    for file_index, path in enumerate(paths):
        content = _decode_file(path)
        lines = content.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for line_index, line in enumerate(lines):
            if format == JSON_LINES:
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestError(f"{path}: record {line_index}: malformed JSON: {exc}")
                if not isinstance(record, dict) or not isinstance(record.get("text"), str):
                    raise IngestError(f"{path}: record {line_index}: missing 'text' string field")
                text = record["text"]
            else:
                text = line
            if dedup:
                digest = _doc_digest(text)
                if digest in seen:
                    continue
                seen.add(digest)
            yield Document(id=f"{file_index}:{line_index}", text=text)


def _shuffled(docs: Iterable[Document], seed: int) -> list[Document]:
    ordered = list(docs)
    random.Random(seed).shuffle(ordered)
    return ordered


def _range_hash(docs: Sequence[Document]) -> str:
    h = hashlib.sha256()
    for doc in docs:
        data = doc.text.encode("utf-8")
        h.update(doc.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(str(len(data)).encode())
        h.update(b"\x00")
        h.update(data)
        h.update(b"\x01")
    return h.hexdigest()


def build_slices(
    stream: Iterable[Document],
    schedule: Sequence[int],
    seed: int,
    labels: Sequence[str] | None = None,
) -> SliceManifest:
    """Construct cumulative slices over a deterministic shuffle.

    Slice k is the shortest prefix of the shuffled order whose cumulative
    UTF-8 byte count reaches ``schedule[k]``; larger slices therefore
    properly contain smaller ones.
    """
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    if labels is not None and len(labels) != len(schedule):
        raise ValueError("labels must match schedule length")
    ordered = _shuffled(stream, seed)
    total = sum(d.byte_len() for d in ordered)
    if not schedule:
        raise ValueError("empty schedule")
    if total < schedule[-1]:
        raise InsufficientDataError(
            f"corpus has {total} bytes, largest slice target is {schedule[-1]}"
        )
    slices: list[Slice] = []
    cum = 0
    idx = 0
    for k, target in enumerate(schedule):
        while cum < target:
            cum += ordered[idx].byte_len()
            idx += 1
        label = labels[k] if labels is not None else str(target)
        slices.append(
            Slice(
                label=label,
                target_bytes=target,
                achieved_bytes=cum,
                doc_range=(0, idx),
                content_hash=_range_hash(ordered[:idx]),
            )
        )
    return SliceManifest(seed=seed, slices=slices, order=[d.id for d in ordered])


def holdout_split(
    stream: Iterable[Document], holdout_bytes: int, seed: int
) -> tuple[list[Document], list[Document]]:
    """Split into (train, holdout); disjoint by document id.

    The holdout is the shortest prefix of a seeded shuffle reaching at
    least ``holdout_bytes``; the remainder, restored to stream order, is
    the training pool.
    """
    docs = list(stream)
    total = sum(d.byte_len() for d in docs)
    if total <= holdout_bytes:
        raise InsufficientDataError(
            f"corpus has {total} bytes, cannot hold out {holdout_bytes}"
        )
    if holdout_bytes == 0:
        return docs, []
    order = list(range(len(docs)))
    random.Random(seed).shuffle(order)
    held: set[int] = set()
    cum = 0
    for i in order:
        if cum >= holdout_bytes:
            break
        held.add(i)
        cum += docs[i].byte_len()
    train = [docs[i] for i in range(len(docs)) if i not in held]
    holdout = [docs[i] for i in sorted(held)]
    return train, holdout


# ---------------------------------------------------------------------------
# Manifest persistence (JSON; keys: label, target_bytes, achieved_bytes,
# doc_range, content_hash).


def save_manifest(manifest: SliceManifest, path: str) -> None:
    payload = {
        "seed": manifest.seed,
        "slices": [
            {
                "label": s.label,
                "target_bytes": s.target_bytes,
                "achieved_bytes": s.achieved_bytes,
                "doc_range": list(s.doc_range),
                "content_hash": s.content_hash,
            }
            for s in manifest.slices
        ],
        "order": manifest.order,
    }
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fp:
        json.dump(payload, fp, indent=1)
        fp.write("\n")
    os.replace(tmp, path)


def load_manifest(path: str) -> SliceManifest:
    with open(path, "r", encoding="utf-8") as fp:
        try:
            payload = json.load(fp)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: malformed manifest: {exc}")
    slices = [
        Slice(
            label=s["label"],
            target_bytes=s["target_bytes"],
            achieved_bytes=s["achieved_bytes"],
            doc_range=tuple(s["doc_range"]),
            content_hash=s["content_hash"],
        )
        for s in payload["slices"]
    ]
    return SliceManifest(seed=payload["seed"], slices=slices, order=payload["order"])
