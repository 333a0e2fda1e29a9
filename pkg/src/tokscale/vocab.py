"""Trained vocabulary container and its canonical file format."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import IO

from .errors import FormatError
from .escape import escape_bytes, unescape_bytes

BPE = "bpe"
UNIGRAM = "unigram"
WORDPIECE = "wordpiece"
ALGORITHMS = (BPE, UNIGRAM, WORDPIECE)

DEFAULT_CONTINUATION_MARKER = b"##"
UNKNOWN_TOKEN = b"[UNK]"


@dataclass
class TrainerConfig:
    vocab_size: int
    unigram_seed_size: int = 0  # 0: pick automatically from vocab_size
    unigram_prune_keep_fraction: float = 0.75
    unigram_em_iterations_per_round: int = 2
    wordpiece_min_pair_count: int = 2
    max_token_bytes: int = 16

    def __post_init__(self) -> None:
        if not (0.0 < self.unigram_prune_keep_fraction < 1.0):
            raise ValueError("unigram_prune_keep_fraction must be in (0, 1)")
        if self.max_token_bytes < 1:
            raise ValueError("max_token_bytes must be >= 1")
        if self.unigram_em_iterations_per_round < 1:
            raise ValueError("unigram_em_iterations_per_round must be >= 1")

    def effective_unigram_seed_size(self) -> int:
        if self.unigram_seed_size:
            return self.unigram_seed_size
        return max(4 * self.vocab_size, self.vocab_size + 1024)

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "unigram_seed_size": self.unigram_seed_size,
            "unigram_prune_keep_fraction": self.unigram_prune_keep_fraction,
            "unigram_em_iterations_per_round": self.unigram_em_iterations_per_round,
            "wordpiece_min_pair_count": self.wordpiece_min_pair_count,
            "max_token_bytes": self.max_token_bytes,
        }


@dataclass
class Vocabulary:
    """A trained token inventory; index into ``tokens`` is the token id.

    ``merges`` is populated for merge-based algorithms (BPE and
    WordPiece), ``scores`` (log-probabilities) for UnigramLM only.
    """

    algorithm: str
    tokens: list[bytes]
    merges: list[tuple[int, int]] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    continuation_marker: bytes = b""
    special: list[bytes] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def token_index(self) -> dict[bytes, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    def token_set(self) -> frozenset[bytes]:
        return frozenset(self.tokens)

    def serialize(self) -> str:
        payload = {
            "algorithm": self.algorithm,
            "tokens": [escape_bytes(t) for t in self.tokens],
            "merges": [list(m) for m in self.merges],
            "scores": self.scores,
            "continuation_marker": escape_bytes(self.continuation_marker),
            "special": [escape_bytes(t) for t in self.special],
        }
        return json.dumps(payload, indent=None, separators=(",", ":")) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


def write_vocab(vocab: Vocabulary, fp: IO[str]) -> None:
    fp.write(vocab.serialize())


def read_vocab(fp: IO[str]) -> Vocabulary:
    try:
        payload = json.load(fp)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed vocabulary file: {exc}")
    try:
        vocab = Vocabulary(
            algorithm=payload["algorithm"],
            tokens=[unescape_bytes(t) for t in payload["tokens"]],
            merges=[tuple(m) for m in payload["merges"]],
            scores=list(payload["scores"]),
            continuation_marker=unescape_bytes(payload["continuation_marker"]),
            special=[unescape_bytes(t) for t in payload["special"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid vocabulary payload: {exc}")
    if len(set(vocab.tokens)) != len(vocab.tokens):
        raise FormatError("duplicate tokens in vocabulary file")
    return vocab


def save_vocab(vocab: Vocabulary, path) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fp:
        write_vocab(vocab, fp)
    os.replace(tmp, path)


def load_vocab(path) -> Vocabulary:
    with open(path, "r", encoding="utf-8", newline="\n") as fp:
        return read_vocab(fp)
