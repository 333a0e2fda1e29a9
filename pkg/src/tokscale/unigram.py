"""UnigramLM trainer: frequent-substring seeding, hard-EM rounds and
loss-driven pruning down to the requested vocabulary size.

EM re-estimates token probabilities from expected counts under the
maximum-likelihood (Viterbi) segmentation of each weighted chunk, so all
per-pass statistics are integers and the result is independent of
processing order. Single-byte tokens are never pruned, keeping the
segmenter total over arbitrary bytes.
"""

from __future__ import annotations

import math
from collections import Counter

from .errors import TrainingError
from .pretokenize import PretokenTable
from .vocab import UNIGRAM, TrainerConfig, Vocabulary

_NEG_INF = float("-inf")
_UNUSED_COUNT = 1e-2  # pseudo-count keeping unused tokens finitely scored
_SEED_COUNTER_LIMIT = 12_000_000


def _seed_substrings(table: PretokenTable, max_len: int, budget: int) -> list[tuple[bytes, int]]:
    """Most frequent multi-byte substrings of the chunks, weighted by
    chunk counts. The counter is trimmed at a rising threshold when it
    outgrows memory; types are visited in canonical order, so trimming
    is deterministic."""
    counts: Counter = Counter()
    trim_threshold = 2
    for chunk, weight in table.sorted_items():
        n = len(chunk)
        for i in range(n):
            top = min(max_len, n - i)
            for ln in range(2, top + 1):
                counts[chunk[i : i + ln]] += weight
        if len(counts) > _SEED_COUNTER_LIMIT:
            counts = Counter({k: v for k, v in counts.items() if v >= trim_threshold})
            trim_threshold += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:budget]


def _viterbi(chunk: bytes, lookup: dict[bytes, int], scores: list[float], max_len: int):
    """Best segmentation token ids, or None when unreachable."""
    n = len(chunk)
    best = [_NEG_INF] * (n + 1)
    best[0] = 0.0
    back: list[tuple[int, int] | None] = [None] * (n + 1)
    for i in range(1, n + 1):
        lo = max(0, i - max_len)
        b_i = _NEG_INF
        bk = None
        for j in range(lo, i):
            prev = best[j]
            if prev == _NEG_INF:
                continue
            tid = lookup.get(chunk[j:i])
            if tid is None:
                continue
            s = prev + scores[tid]
            if s > b_i:
                b_i = s
                bk = (j, tid)
        best[i] = b_i
        back[i] = bk
    if back[n] is None and n > 0:
        return None
    ids: list[int] = []
    i = n
    while i > 0:
        j, tid = back[i]  # type: ignore[misc]
        ids.append(tid)
        i = j
    ids.reverse()
    return ids


def _em_pass(
    items: list[tuple[bytes, int]],
    tokens: list[bytes],
    lookup: dict[bytes, int],
    scores: list[float],
    max_len: int,
) -> tuple[list[float], list[int]]:
    """One hard-EM pass; returns (new scores, per-token usage counts)."""
    usage = [0] * len(tokens)
    for chunk, weight in items:
        ids = _viterbi(chunk, lookup, scores, max_len)
        if ids is None:  # cannot happen with the full byte alphabet present
            continue
        for tid in ids:
            usage[tid] += weight
    smoothed = [c if c > 0 else _UNUSED_COUNT for c in usage]
    total = math.fsum(smoothed)
    log_total = math.log(total)
    new_scores = [math.log(c) - log_total for c in smoothed]
    return new_scores, usage


def _prune_order(
    tokens: list[bytes],
    lookup: dict[bytes, int],
    scores: list[float],
    usage: list[int],
    max_len: int,
) -> list[int]:
    """Multi-byte token ids sorted by how little their removal would
    increase the corpus loss (cheapest removal first)."""
    ranked: list[tuple[float, int, bytes, int]] = []
    for tid, tok in enumerate(tokens):
        if len(tok) <= 1:
            continue
        own_cost = -scores[tid]
        alt_ids = _viterbi_excluding(tok, lookup, scores, max_len, tid)
        if alt_ids is None:
            alt_cost = float("inf")
        else:
            alt_cost = -sum(scores[i] for i in alt_ids)
        loss_increase = usage[tid] * (alt_cost - own_cost)
        ranked.append((loss_increase, usage[tid], tok, tid))
    ranked.sort(key=lambda r: (r[0], r[1], r[2]))
    return [r[3] for r in ranked]


def _viterbi_excluding(
    chunk: bytes, lookup: dict[bytes, int], scores: list[float], max_len: int, skip: int
):
    n = len(chunk)
    best = [_NEG_INF] * (n + 1)
    best[0] = 0.0
    back: list[tuple[int, int] | None] = [None] * (n + 1)
    for i in range(1, n + 1):
        for j in range(max(0, i - max_len), i):
            if best[j] == _NEG_INF:
                continue
            tid = lookup.get(chunk[j:i])
            if tid is None or (tid == skip and j == 0 and i == n):
                continue
            s = best[j] + scores[tid]
            if s > best[i]:
                best[i] = s
                back[i] = (j, tid)
    if back[n] is None and n > 0:
        return None
    ids = []
    i = n
    while i > 0:
        j, tid = back[i]  # type: ignore[misc]
        ids.append(tid)
        i = j
    return ids


def train_unigram(table: PretokenTable, cfg: TrainerConfig) -> Vocabulary:
    if not table.entries:
        raise TrainingError("empty pretoken table", achieved=0)
    if cfg.vocab_size < 256:
        raise TrainingError(
            f"vocab_size {cfg.vocab_size} below byte alphabet size 256", achieved=256
        )
    seed_size = cfg.effective_unigram_seed_size()
    if seed_size <= cfg.vocab_size:
        raise TrainingError(
            f"unigram_seed_size {seed_size} must exceed vocab_size {cfg.vocab_size}"
        )
    max_len = cfg.max_token_bytes
    items = table.sorted_items()

    byte_counts = [0] * 256
    for chunk, weight in items:
        for b in chunk:
            byte_counts[b] += weight

    multi = _seed_substrings(table, max_len, budget=seed_size - 256)
    tokens: list[bytes] = [bytes([b]) for b in range(256)]
    init_counts: list[float] = [max(c, _UNUSED_COUNT) for c in byte_counts]
    for sub, cnt in multi:
        tokens.append(sub)
        init_counts.append(float(cnt))
    if len(tokens) < cfg.vocab_size:
        raise TrainingError(
            f"only {len(tokens)} candidate tokens available for vocab_size "
            f"{cfg.vocab_size}",
            achieved=len(tokens),
        )
    total = math.fsum(init_counts)
    scores = [math.log(c / total) for c in init_counts]
    lookup = {tok: i for i, tok in enumerate(tokens)}

    usage = [0] * len(tokens)
    while True:
        for _ in range(cfg.unigram_em_iterations_per_round):
            scores, usage = _em_pass(items, tokens, lookup, scores, max_len)
        if len(tokens) <= cfg.vocab_size:
            break
        target = max(cfg.vocab_size, int(len(tokens) * cfg.unigram_prune_keep_fraction))
        n_remove = len(tokens) - target
        order = _prune_order(tokens, lookup, scores, usage, max_len)
        doomed = set(order[:n_remove])
        keep = [tid for tid in range(len(tokens)) if tid not in doomed]
        tokens = [tokens[tid] for tid in keep]
        scores = [scores[tid] for tid in keep]
        lookup = {tok: i for i, tok in enumerate(tokens)}

    # Settle the final inventory with one more pass, then renormalize.
    scores, usage = _em_pass(items, tokens, lookup, scores, max_len)
    assert len(tokens) == cfg.vocab_size
    return Vocabulary(algorithm=UNIGRAM, tokens=tokens, scores=scores)
