"""Merge-based trainers (BPE and WordPiece) over aggregated chunk counts.

Both trainers operate on the :class:`PretokenTable` only, never on raw
text: each unique chunk is one weighted word, and pair statistics are
weighted by chunk counts. Adjacent pairs never cross chunk boundaries.

Tie-breaking for equal merge scores is the pair with the smaller left
token id, then the smaller right token id, giving a total deterministic
order.
"""

from __future__ import annotations

from array import array

import numpy as np

from .errors import TrainingError
from .pretokenize import PretokenTable
from .unigram import train_unigram  # re-export: the third trainer
from .vocab import (
    BPE,
    DEFAULT_CONTINUATION_MARKER,
    UNKNOWN_TOKEN,
    WORDPIECE,
    TrainerConfig,
    Vocabulary,
)

__all__ = ["train_bpe", "train_wordpiece", "train_unigram", "TrainerConfig", "Vocabulary"]

_GROW = 1 << 15


class _PairSpace:
    """Adjacent-pair statistics with numpy-backed counts.

    Slots are append-only; a merged pair's count drops to zero and its
    occurrence list is cleared (a pair of two pre-existing units can
    never be re-created, since later merges only introduce pairs that
    involve the new unit).
    """

    def __init__(self) -> None:
        self.slot: dict[tuple[int, int], int] = {}
        cap = _GROW
        self.left = np.zeros(cap, dtype=np.int64)
        self.right = np.zeros(cap, dtype=np.int64)
        self.count = np.zeros(cap, dtype=np.int64)
        self.merged_len = np.zeros(cap, dtype=np.int64)
        self.occ: list[array] = []
        self.n = 0

    def _grow(self) -> None:
        cap = len(self.count) * 2
        for name in ("left", "right", "count", "merged_len"):
            arr = getattr(self, name)
            new = np.zeros(cap, dtype=np.int64)
            new[: self.n] = arr[: self.n]
            setattr(self, name, new)

    def slot_of(self, pair: tuple[int, int], unit_len) -> int:
        s = self.slot.get(pair)
        if s is None:
            s = self.n
            if s == len(self.count):
                self._grow()
            self.slot[pair] = s
            self.left[s] = pair[0]
            self.right[s] = pair[1]
            self.merged_len[s] = unit_len(pair[0]) + unit_len(pair[1])
            self.occ.append(array("i"))
            self.n = s + 1
        return s

    def add(self, pair: tuple[int, int], delta: int, widx: int | None, unit_len) -> None:
        s = self.slot_of(pair, unit_len)
        self.count[s] += delta
        if widx is not None:
            self.occ[s].append(widx)


def _build_words(
    table: PretokenTable, to_units
) -> tuple[list[list[int]], list[int]]:
    words: list[list[int]] = []
    weights: list[int] = []
    for chunk_bytes, count in table.sorted_items():
        words.append(to_units(chunk_bytes))
        weights.append(count)
    return words, weights


def _scan_pairs(space: _PairSpace, words, weights, unit_len) -> None:
    for widx, word in enumerate(words):
        weight = weights[widx]
        prev_pair = None
        for a, b in zip(word, word[1:]):
            pair = (a, b)
            space.add(pair, weight, widx if pair != prev_pair else None, unit_len)
            prev_pair = pair
    # Occurrence lists may hold duplicates for repeated pairs in one word;
    # merge application deduplicates.


def _apply_merge(
    space: _PairSpace,
    pair: tuple[int, int],
    new_id: int,
    words,
    weights,
    unit_len,
    unit_counts: list[int] | None = None,
) -> None:
    left, right = pair
    s = space.slot[pair]
    seen: set[int] = set()
    for widx in space.occ[s]:
        if widx in seen:
            continue
        seen.add(widx)
        word = words[widx]
        new_word: list[int] = []
        i = 0
        n = len(word)
        replaced = 0
        while i < n:
            if i + 1 < n and word[i] == left and word[i + 1] == right:
                new_word.append(new_id)
                i += 2
                replaced += 1
            else:
                new_word.append(word[i])
                i += 1
        if not replaced:
            continue  # stale occurrence
        weight = weights[widx]
        delta: dict[tuple[int, int], int] = {}
        for p in zip(word, word[1:]):
            delta[p] = delta.get(p, 0) - 1
        for p in zip(new_word, new_word[1:]):
            delta[p] = delta.get(p, 0) + 1
        for p, d in delta.items():
            if d:
                space.add(p, d * weight, widx if d > 0 else None, unit_len)
        words[widx] = new_word
        if unit_counts is not None:
            unit_counts[left] -= replaced * weight
            unit_counts[right] -= replaced * weight
            unit_counts[new_id] += replaced * weight
    space.occ[s] = array("i")
    space.count[s] = 0


def _lex_min_pair(space: _PairSpace, candidate_slots) -> tuple[int, int]:
    best = None
    for s in candidate_slots:
        pair = (int(space.left[s]), int(space.right[s]))
        if best is None or pair < best:
            best = pair
    assert best is not None
    return best


def train_bpe(table: PretokenTable, cfg: TrainerConfig) -> Vocabulary:
    """Byte-level BPE: start from the 256 single-byte tokens and merge
    the maximal-count adjacent pair until ``vocab_size`` tokens exist."""
    if not table.entries:
        raise TrainingError("empty pretoken table", achieved=0)
    if cfg.vocab_size < 256:
        raise TrainingError(
            f"vocab_size {cfg.vocab_size} below byte alphabet size 256", achieved=256
        )
    tokens: list[bytes] = [bytes([b]) for b in range(256)]
    token_len = [1] * 256

    def unit_len(u: int) -> int:
        return token_len[u]

    words, weights = _build_words(table, lambda b: list(b))
    space = _PairSpace()
    _scan_pairs(space, words, weights, unit_len)
    merges: list[tuple[int, int]] = []
    last_count = None
    while len(tokens) < cfg.vocab_size:
        n = space.n
        counts = space.count[:n]
        valid = (counts > 0) & (space.merged_len[:n] <= cfg.max_token_bytes)
        if not valid.any():
            raise TrainingError(
                f"no mergeable pairs left at vocabulary size {len(tokens)}",
                achieved=len(tokens),
            )
        top = int(counts[valid].max())
        cand = np.nonzero(valid & (counts == top))[0]
        pair = _lex_min_pair(space, cand)
        if last_count is not None and top > last_count:
            # Selected counts are non-increasing over merge order; a rise
            # would mean corrupted incremental statistics.
            raise AssertionError("pair count increased across merges")
        last_count = top
        new_id = len(tokens)
        tokens.append(tokens[pair[0]] + tokens[pair[1]])
        token_len.append(token_len[pair[0]] + token_len[pair[1]])
        merges.append(pair)
        _apply_merge(space, pair, new_id, words, weights, unit_len)
    return Vocabulary(algorithm=BPE, tokens=tokens, merges=merges)


def _wp_base_tokens(marker: bytes) -> list[bytes]:
    # id 0 is the unknown sentinel; 256 word-initial byte units follow,
    # then 256 continuation byte units.
    tokens = [UNKNOWN_TOKEN]
    tokens.extend(bytes([b]) for b in range(256))
    tokens.extend(marker + bytes([b]) for b in range(256))
    return tokens


WORDPIECE_BASE_SIZE = 513


def train_wordpiece(
    table: PretokenTable,
    cfg: TrainerConfig,
    marker: bytes = DEFAULT_CONTINUATION_MARKER,
) -> Vocabulary:
    """WordPiece: merge the pair maximizing count(ab)/(count(a)*count(b))
    among pairs with count >= ``wordpiece_min_pair_count``."""
    if not table.entries:
        raise TrainingError("empty pretoken table", achieved=0)
    if cfg.vocab_size < WORDPIECE_BASE_SIZE:
        raise TrainingError(
            f"vocab_size {cfg.vocab_size} below WordPiece base size {WORDPIECE_BASE_SIZE}",
            achieved=WORDPIECE_BASE_SIZE,
        )
    tokens = _wp_base_tokens(marker)
    # content length excludes the marker, keeping the cap comparable to BPE
    content_len = [0] + [1] * 512

    def unit_len(u: int) -> int:
        return content_len[u]

    def to_units(chunk: bytes) -> list[int]:
        units = [1 + chunk[0]]
        units.extend(257 + b for b in chunk[1:])
        return units

    words, weights = _build_words(table, to_units)
    unit_counts = [0] * len(tokens)
    for word, weight in zip(words, weights):
        for u in word:
            unit_counts[u] += weight
    space = _PairSpace()
    _scan_pairs(space, words, weights, unit_len)
    merges: list[tuple[int, int]] = []
    while len(tokens) < cfg.vocab_size:
        n = space.n
        counts = space.count[:n]
        valid = (counts >= cfg.wordpiece_min_pair_count) & (
            space.merged_len[:n] <= cfg.max_token_bytes
        )
        if not valid.any():
            raise TrainingError(
                f"no qualifying pairs left at vocabulary size {len(tokens)}",
                achieved=len(tokens),
            )
        uc = np.asarray(unit_counts, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(
                valid,
                counts / (uc[space.left[:n]] * uc[space.right[:n]]),
                -1.0,
            )
        top = scores.max()
        near = np.nonzero(scores >= top * (1.0 - 1e-9))[0]
        pair = _select_wp_pair(space, unit_counts, near)
        new_id = len(tokens)
        left_tok, right_tok = tokens[pair[0]], tokens[pair[1]]
        # right side is always a continuation unit; strip its marker
        tokens.append(left_tok + right_tok[len(marker):])
        content_len.append(content_len[pair[0]] + content_len[pair[1]])
        unit_counts.append(0)
        merges.append(pair)
        _apply_merge(space, pair, new_id, words, weights, unit_len, unit_counts)
    return Vocabulary(
        algorithm=WORDPIECE,
        tokens=tokens,
        merges=merges,
        continuation_marker=marker,
        special=[UNKNOWN_TOKEN],
    )


def _select_wp_pair(space: _PairSpace, unit_counts: list[int], candidate_slots):
    """Exact fraction comparison among float near-ties.

    score = c / (u_l * u_r); compared by integer cross-multiplication so
    equal rationals tie exactly, then (left, right) ascending.
    """
    best_pair = None
    best_num = best_den = 0
    for s in candidate_slots:
        left = int(space.left[s])
        right = int(space.right[s])
        num = int(space.count[s])
        den = unit_counts[left] * unit_counts[right]
        if best_pair is None:
            better = True
        else:
            lhs = num * best_den
            rhs = best_num * den
            better = lhs > rhs or (lhs == rhs and (left, right) < best_pair)
        if better:
            best_pair = (left, right)
            best_num, best_den = num, den
    assert best_pair is not None
    return best_pair
