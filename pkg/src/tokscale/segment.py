"""Encoding and decoding under a trained vocabulary.

Text is pre-tokenized first; each chunk is encoded independently:
BPE applies merges in learned order, UnigramLM takes the Viterbi
segmentation, WordPiece greedy longest-prefix matching with the
continuation marker and a whole-chunk unknown on failure.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import IO, Iterable

from .errors import FormatError, VocabularyError
from .pretokenize import GPT4_PATTERN, PretokenTable, chunk
from .vocab import BPE, UNIGRAM, WORDPIECE, Vocabulary

# Unigram log-probabilities are quantized to fixed-point before the DP so
# that path scores are exact integer sums: comparisons are then independent
# of summation order, and ties (e.g. reorderings of the same token multiset)
# resolve deterministically instead of hinging on float rounding.
SCORE_SCALE = 1 << 40


def quantize_score(score: float) -> int:
    return round(score * SCORE_SCALE)


@dataclass
class TokenUsageStats:
    """Per-token usage counts from encoding an evaluation corpus."""

    counts: dict[int, int] = field(default_factory=dict)
    total_tokens: int = 0
    total_bytes: int = 0
    vocab_ref: str = ""
    vocab_size: int = 0


class Encoder:
    """Reusable encoder with per-vocabulary lookup structures and a
    per-chunk memo, so repeated chunks are tokenized once."""

    def __init__(self, vocab: Vocabulary, pattern: str = GPT4_PATTERN):
        self.vocab = vocab
        self.pattern = pattern
        self._memo: dict[bytes, tuple[int, ...]] = {}
        alg = vocab.algorithm
        if alg == BPE:
            self._ranks = {pair: i for i, pair in enumerate(vocab.merges)}
        elif alg == UNIGRAM:
            if len(vocab.scores) != len(vocab.tokens):
                raise VocabularyError("unigram vocabulary lacks aligned scores")
            self._lookup = vocab.token_index()
            self._iscores = [quantize_score(s) for s in vocab.scores]
            self._max_len = max((len(t) for t in vocab.tokens), default=1)
        elif alg == WORDPIECE:
            marker = vocab.continuation_marker
            self._initial: dict[bytes, int] = {}
            self._cont: dict[bytes, int] = {}
            special = set(vocab.special)
            self._unk_id = None
            for tid, tok in enumerate(vocab.tokens):
                if tok in special:
                    if tok == vocab.special[0]:
                        self._unk_id = tid
                    continue
                if marker and tok.startswith(marker) and len(tok) > len(marker):
                    self._cont[tok[len(marker):]] = tid
                else:
                    self._initial[tok] = tid
            if self._unk_id is None:
                raise VocabularyError("wordpiece vocabulary lacks an unknown sentinel")
            lens = [len(t) for t in self._initial] + [len(t) for t in self._cont]
            self._max_len = max(lens, default=1)
        else:  # pragma: no cover - guarded by Vocabulary.__post_init__
            raise VocabularyError(f"unknown algorithm {alg!r}")

    # -- per-chunk encoders -------------------------------------------------

    def _encode_bpe(self, data: bytes) -> list[int]:
        parts = list(data)
        ranks = self._ranks
        while len(parts) > 1:
            best_rank = None
            best_idx = -1
            for i in range(len(parts) - 1):
                rank = ranks.get((parts[i], parts[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_idx = i
            if best_rank is None:
                break
            parts[best_idx : best_idx + 2] = [256 + best_rank]
        return parts

    def _encode_unigram(self, data: bytes) -> list[int]:
        # Right-to-left DP over exact fixed-point scores; ties resolved
        # toward fewer tokens, then the smaller token id, which yields the
        # lexicographically smallest id sequence among optimal segmentations.
        n = len(data)
        iscores = self._iscores
        lookup = self._lookup
        max_len = self._max_len
        lp: list[int | None] = [None] * (n + 1)
        ntok = [0] * (n + 1)
        choice: list[tuple[int, int] | None] = [None] * (n + 1)
        lp[n] = 0
        for i in range(n - 1, -1, -1):
            best = None
            for j in range(i + 1, min(i + max_len, n) + 1):
                if lp[j] is None:
                    continue
                tid = lookup.get(data[i:j])
                if tid is None:
                    continue
                cand = (iscores[tid] + lp[j], -(1 + ntok[j]), -tid)
                if best is None or cand > best:
                    best = cand
                    choice[i] = (tid, j)
            if best is not None:
                lp[i] = best[0]
                ntok[i] = -best[1]
        if n > 0 and choice[0] is None:
            raise VocabularyError("chunk not segmentable under unigram vocabulary")
        out: list[int] = []
        i = 0
        while i < n:
            tid, j = choice[i]  # type: ignore[misc]
            out.append(tid)
            i = j
        return out

    def _encode_wordpiece(self, data: bytes) -> list[int]:
        out: list[int] = []
        i = 0
        n = len(data)
        table = self._initial
        while i < n:
            end = min(n, i + self._max_len)
            tid = None
            for j in range(end, i, -1):
                tid = table.get(data[i:j])
                if tid is not None:
                    out.append(tid)
                    i = j
                    break
            if tid is None:
                return [self._unk_id]
            table = self._cont
        return out

    def encode_chunk(self, data: bytes) -> tuple[int, ...]:
        ids = self._memo.get(data)
        if ids is None:
            alg = self.vocab.algorithm
            if alg == BPE:
                ids = tuple(self._encode_bpe(data))
            elif alg == UNIGRAM:
                ids = tuple(self._encode_unigram(data))
            else:
                ids = tuple(self._encode_wordpiece(data))
            self._memo[data] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        for part in chunk(text, self.pattern):
            out.extend(self.encode_chunk(part))
        return out


def encode(vocab: Vocabulary, text: str, pattern: str = GPT4_PATTERN) -> list[int]:
    return Encoder(vocab, pattern).encode(text)


def decode(vocab: Vocabulary, ids: Iterable[int]) -> str:
    """Inverse of encode up to unknown-sentinel loss; exact for BPE and
    UnigramLM. Byte sequences that are not valid UTF-8 (possible only
    for id lists that no encode produced) decode with replacement."""
    marker = vocab.continuation_marker
    tokens = vocab.tokens
    parts: list[bytes] = []
    for tid in ids:
        if not isinstance(tid, int) or tid < 0 or tid >= len(tokens):
            raise VocabularyError(f"token id {tid!r} out of range")
        tok = tokens[tid]
        if marker and tok.startswith(marker) and len(tok) > len(marker) and tok not in vocab.special:
            tok = tok[len(marker):]
        parts.append(tok)
    return b"".join(parts).decode("utf-8", errors="replace")


def encode_table(
    vocab: Vocabulary, table: PretokenTable, pattern: str = GPT4_PATTERN
) -> TokenUsageStats:
    """Encode every unique chunk once, weighting token usage by the
    chunk count. Equivalent to streaming encode over the expanded corpus."""
    enc = Encoder(vocab, pattern)
    counts: dict[int, int] = {}
    total_tokens = 0
    for chunk_bytes, weight in table.sorted_items():
        ids = enc.encode_chunk(chunk_bytes)
        for tid in ids:
            counts[tid] = counts.get(tid, 0) + weight
        total_tokens += len(ids) * weight
    return TokenUsageStats(
        counts=counts,
        total_tokens=total_tokens,
        total_bytes=table.total_bytes,
        vocab_ref=vocab.digest(),
        vocab_size=len(vocab.tokens),
    )


# ---------------------------------------------------------------------------
# Stats file format: header with totals and vocabulary digest, then one
# "<token-id>\t<count>" line per used token, sorted by id.

_STATS_MAGIC = "#token-usage"


def write_stats(stats: TokenUsageStats, fp: IO[str]) -> None:
    fp.write(
        f"{_STATS_MAGIC}\ttotal_tokens={stats.total_tokens}"
        f"\ttotal_bytes={stats.total_bytes}\tvocab_size={stats.vocab_size}"
        f"\tvocab_ref={stats.vocab_ref}\n"
    )
    for tid in sorted(stats.counts):
        fp.write(f"{tid}\t{stats.counts[tid]}\n")


def read_stats(fp: IO[str]) -> TokenUsageStats:
    header = fp.readline().rstrip("\n")
    parts = header.split("\t")
    if not parts or parts[0] != _STATS_MAGIC:
        raise FormatError("not a token-usage stats file")
    meta = dict(p.split("=", 1) for p in parts[1:])
    counts: dict[int, int] = {}
    for lineno, line in enumerate(fp, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            tid_str, count_str = line.split("\t")
            counts[int(tid_str)] = int(count_str)
        except ValueError:
            raise FormatError(f"malformed stats line {lineno}")
    stats = TokenUsageStats(
        counts=counts,
        total_tokens=int(meta.get("total_tokens", 0)),
        total_bytes=int(meta.get("total_bytes", 0)),
        vocab_ref=meta.get("vocab_ref", ""),
        vocab_size=int(meta.get("vocab_size", 0)),
    )
    if sum(counts.values()) != stats.total_tokens:
        raise FormatError("stats header total_tokens does not match entries")
    return stats


def save_stats(stats: TokenUsageStats, path) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fp:
        write_stats(stats, fp)
    os.replace(tmp, path)


def load_stats(path) -> TokenUsageStats:
    with open(path, "r", encoding="utf-8", newline="\n") as fp:
        return read_stats(fp)
