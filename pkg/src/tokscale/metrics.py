"""Quantitative measures over vocabularies and token usage statistics.

Entropy uses natural logarithms throughout; all efficiency values are
ratios and therefore base-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Sequence

from scipy import stats as scipy_stats

from .errors import FormatError, MetricError
from .pretokenize import chunk as pretok_chunk
from .segment import Encoder, TokenUsageStats
from .vocab import WORDPIECE, Vocabulary


@dataclass(frozen=True)
class RenyiParams:
    alpha: float = 2.5

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class DomainScoreParams:
    theta: float = 10.0
    epsilon: float = 1e-9
    min_count: int = 5

    def __post_init__(self) -> None:
        if self.theta <= 1:
            raise ValueError("theta must exceed 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class GoldSegmentation:
    entries: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for word, morphs in self.entries.items():
            if "".join(morphs) != word:
                raise ValueError(f"morphs of {word!r} do not concatenate to the word")


@dataclass
class CognitiveLexicon:
    entries: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for word, value in self.entries.items():
            if not math.isfinite(value):
                raise ValueError(f"non-finite measure for {word!r}")


# -- vocabulary-level comparisons -------------------------------------------


def vocab_overlap(v: Vocabulary, ref: Vocabulary) -> float:
    """Fraction of tokens shared between two equal-size vocabularies."""
    if len(v.tokens) != len(ref.tokens):
        raise MetricError(
            f"vocabulary sizes differ: {len(v.tokens)} vs {len(ref.tokens)}"
        )
    return len(v.token_set() & ref.token_set()) / len(v.tokens)


def overlap_matrix(vocabs: Sequence[Vocabulary]) -> list[list[float]]:
    n = len(vocabs)
    matrix = [[1.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i][j] = matrix[j][i] = vocab_overlap(vocabs[i], vocabs[j])
    return matrix


# -- usage-level comparisons -------------------------------------------------


def usage_by_bytes(stats: TokenUsageStats, vocab: Vocabulary) -> dict[bytes, int]:
    if len(vocab.tokens) != stats.vocab_size:
        raise MetricError("stats were not produced under a vocabulary of this size")
    return {vocab.tokens[tid]: c for tid, c in stats.counts.items() if c > 0}


def jaccard(
    a: TokenUsageStats,
    b: TokenUsageStats,
    vocab_a: Vocabulary,
    vocab_b: Vocabulary,
) -> tuple[float, float]:
    """(plain, weighted) Jaccard over the tokens actually used.

    Token identity is the token byte sequence, so stats from different
    vocabularies are comparable. Weighted: sum of elementwise min over
    sum of elementwise max of the per-side normalized frequencies.
    """
    used_a = usage_by_bytes(a, vocab_a)
    used_b = usage_by_bytes(b, vocab_b)
    if not used_a and not used_b:
        raise MetricError("Jaccard undefined: both usage sets empty")
    union = set(used_a) | set(used_b)
    inter = set(used_a) & set(used_b)
    plain = len(inter) / len(union)
    total_a = sum(used_a.values())
    total_b = sum(used_b.values())
    # fsum: the correctly-rounded sum is independent of set iteration order,
    # keeping results byte-identical across processes and hash seeds.
    weights = [
        (
            used_a.get(tok, 0) / total_a if total_a else 0.0,
            used_b.get(tok, 0) / total_b if total_b else 0.0,
        )
        for tok in union
    ]
    num = math.fsum(min(wa, wb) for wa, wb in weights)
    den = math.fsum(max(wa, wb) for wa, wb in weights)
    return plain, num / den


def renyi_entropy(probabilities: Sequence[float], alpha: float) -> float:
    if alpha == 1.0:
        raise MetricError("alpha=1 is the Shannon limit; use shannon_entropy")
    acc = math.fsum(p**alpha for p in probabilities if p > 0)
    return math.log(acc) / (1.0 - alpha)


def shannon_entropy(probabilities: Sequence[float]) -> float:
    return -math.fsum(p * math.log(p) for p in probabilities if p > 0)


def renyi_efficiency(stats: TokenUsageStats, params: RenyiParams) -> float:
    """H_alpha of the usage distribution divided by log |V|."""
    if stats.total_tokens <= 0:
        raise MetricError("no token usage")
    if stats.vocab_size < 2:
        raise MetricError("vocabulary too small for entropy ratio")
    probs = [c / stats.total_tokens for c in stats.counts.values()]
    return renyi_entropy(probs, params.alpha) / math.log(stats.vocab_size)


def shannon_efficiency(stats: TokenUsageStats) -> float:
    if stats.total_tokens <= 0:
        raise MetricError("no token usage")
    probs = [c / stats.total_tokens for c in stats.counts.values()]
    return shannon_entropy(probs) / math.log(stats.vocab_size)


def pretoken_coverage(vocab: Vocabulary, table) -> tuple[float, float]:
    """Fractions of pre-tokens that are a single vocabulary token,
    by distinct chunk (type) and weighted by chunk count."""
    if not table.entries:
        return 0.0, 0.0
    if vocab.algorithm == WORDPIECE:
        marker = vocab.continuation_marker
        special = set(vocab.special)
        singles = {
            t
            for t in vocab.tokens
            if t not in special and not (marker and t.startswith(marker))
        }
    else:
        singles = set(vocab.tokens)
    hit_types = 0
    hit_counts = 0
    for chunk_bytes, count in table.entries.items():
        if chunk_bytes in singles:
            hit_types += 1
            hit_counts += count
    return hit_types / len(table.entries), hit_counts / table.total_count


def frequency_coverage(stats: TokenUsageStats, vocab_fraction: float) -> float:
    """Fraction of corpus tokens covered by the top
    ceil(vocab_fraction * |V|) most-used tokens."""
    if not (0.0 < vocab_fraction <= 1.0):
        raise ValueError("vocab_fraction must be in (0, 1]")
    if stats.total_tokens <= 0:
        raise MetricError("no token usage")
    k = math.ceil(vocab_fraction * stats.vocab_size)
    ranked = sorted(stats.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    covered = sum(c for _, c in ranked[:k])
    return covered / stats.total_tokens


# -- benchmark-style metrics -------------------------------------------------


def _boundaries(lengths: Sequence[int]) -> set[int]:
    cuts: set[int] = set()
    pos = 0
    for ln in lengths[:-1]:
        pos += ln
        cuts.add(pos)
    return cuts


def _predicted_boundaries(enc: Encoder, word: str) -> set[int]:
    """Internal token boundaries (byte offsets) of the encoded word.

    An unknown sentinel swallows its whole chunk, contributing the chunk
    length and no internal boundaries.
    """
    vocab = enc.vocab
    marker = vocab.continuation_marker
    special = set(vocab.special)
    lengths: list[int] = []
    for part in pretok_chunk(word, enc.pattern):
        ids = enc.encode_chunk(part)
        if any(vocab.tokens[tid] in special for tid in ids):
            lengths.append(len(part))
            continue
        for tid in ids:
            tok = vocab.tokens[tid]
            if marker and tok.startswith(marker) and len(tok) > len(marker):
                tok = tok[len(marker):]
            lengths.append(len(tok))
    return _boundaries(lengths)


def morph_alignment(
    vocab: Vocabulary, gold: GoldSegmentation
) -> tuple[float, float, float]:
    """Micro-averaged precision/recall/F1 of predicted token boundaries
    against gold morph boundaries (internal byte offsets)."""
    if not gold.entries:
        raise MetricError("empty gold segmentation")
    enc = Encoder(vocab)
    tp = fp = fn = 0
    for word, morphs in gold.entries.items():
        gold_cuts = _boundaries([len(m.encode("utf-8")) for m in morphs])
        pred_cuts = _predicted_boundaries(enc, word)
        tp += len(gold_cuts & pred_cuts)
        fp += len(pred_cuts - gold_cuts)
        fn += len(gold_cuts - pred_cuts)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return precision, recall, f1


def cognitive_correlation(vocab: Vocabulary, lexicon: CognitiveLexicon) -> float:
    """Spearman rank correlation between per-word token count and the
    human measure."""
    if len(lexicon.entries) < 3:
        raise MetricError("need at least 3 lexicon entries")
    enc = Encoder(vocab)
    words = sorted(lexicon.entries)
    token_counts = [len(enc.encode(w)) for w in words]
    measures = [lexicon.entries[w] for w in words]
    if len(set(token_counts)) == 1 or len(set(measures)) == 1:
        raise MetricError("correlation undefined for a constant series")
    rho = scipy_stats.spearmanr(token_counts, measures).statistic
    if not math.isfinite(rho):
        raise MetricError("correlation undefined")
    return float(rho)


# -- domain-term classification ---------------------------------------------

DOMAIN_SPECIFIC = "domain-specific"
GENERAL = "general"
NEUTRAL = "neutral"


def domain_term_classify(
    tf_domain: dict[str, int],
    tf_general: dict[str, int],
    params: DomainScoreParams = DomainScoreParams(),
) -> tuple[dict[str, str], dict[str, float]]:
    """Label terms by relative-frequency ratio between a domain corpus
    and a general corpus.

    Returns (labels, summary); the summary reports type proportions of
    domain-specific, general-plus-neutral, and all-digit (numeric) terms
    among the terms that survive the minimum-count filter.
    """
    total_d = sum(tf_domain.values())
    total_g = sum(tf_general.values())
    if total_d <= 0 or total_g <= 0:
        raise MetricError("both corpora must have positive totals")
    labels: dict[str, str] = {}
    n_domain = n_numeric = n_other = 0
    for term in sorted(set(tf_domain) | set(tf_general)):
        occurrences = tf_domain.get(term, 0) + tf_general.get(term, 0)
        if occurrences < params.min_count:
            continue
        rel_d = tf_domain.get(term, 0) / total_d
        rel_g = tf_general.get(term, 0) / total_g
        score = rel_d / (rel_g + params.epsilon)
        if score >= params.theta:
            label = DOMAIN_SPECIFIC
        elif score <= 1.0 / params.theta:
            label = GENERAL
        else:
            label = NEUTRAL
        labels[term] = label
        if term.isdigit():
            n_numeric += 1
        elif label == DOMAIN_SPECIFIC:
            n_domain += 1
        else:
            n_other += 1
    total = n_domain + n_numeric + n_other
    if total == 0:
        summary = {"domain_specific": 0.0, "general": 0.0, "numeric": 0.0}
    else:
        summary = {
            "domain_specific": n_domain / total,
            "general": n_other / total,
            "numeric": n_numeric / total,
        }
    return labels, summary


# -- file formats for the pluggable benchmark data ---------------------------


def read_gold_segmentation(fp: IO[str]) -> GoldSegmentation:
    """Lines of ``word\\tmorph|morph|...``."""
    entries: dict[str, list[str]] = {}
    for lineno, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        try:
            word, morphs = line.split("\t")
        except ValueError:
            raise FormatError(f"malformed gold segmentation line {lineno}")
        entries[word] = morphs.split("|")
    try:
        return GoldSegmentation(entries)
    except ValueError as exc:
        raise FormatError(str(exc))


def read_cognitive_lexicon(fp: IO[str]) -> CognitiveLexicon:
    """Lines of ``word\\tvalue``."""
    entries: dict[str, float] = {}
    for lineno, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        try:
            word, value = line.split("\t")
            entries[word] = float(value)
        except ValueError:
            raise FormatError(f"malformed lexicon line {lineno}")
    try:
        return CognitiveLexicon(entries)
    except ValueError as exc:
        raise FormatError(str(exc))
