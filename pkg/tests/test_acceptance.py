"""Acceptance gate: one test per top-level acceptance criterion.

Each test prints a single PASS/FAIL line with the measured values and
tolerances. Heavy artifacts (large corpora, study outputs) are cached
under the shared test cache directory, so reruns are cheap.
"""

from __future__ import annotations

import math
import os
import random
import time

import pytest

import synth
from conftest import docs_from_file
from oracles import exhaustive_best_segmentation, naive_bpe, naive_wordpiece
from test_pretokenize import _random_string
from tokscale import metrics as M
from tokscale.experiment import ExperimentConfig, detect_plateau, run_scaling_study
from tokscale.pretokenize import chunk, count_corpus
from tokscale.reference import reference_chunk
from tokscale.segment import Encoder, TokenUsageStats
from tokscale.trainers import WORDPIECE_BASE_SIZE, train_bpe, train_wordpiece
from tokscale.vocab import BPE, UNIGRAM, TrainerConfig, Vocabulary

MB = 1_000_000


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


# -- 1. pre-tokenizer differential test --------------------------------------


def test_acceptance_pretokenizer_differential():
    rng = random.Random(0xACCE97)
    start = time.monotonic()
    mismatches = 0
    n = 10_000
    for _ in range(n):
        text = _random_string(rng)
        got = chunk(text)
        if got != reference_chunk(text) or b"".join(got) != text.encode("utf-8"):
            mismatches += 1
    elapsed = time.monotonic() - start
    _report(
        "pretokenizer-differential",
        mismatches == 0 and elapsed < 60,
        f"{n} fuzz strings, {mismatches} mismatches, round-trip held, "
        f"{elapsed:.1f}s < 60s",
    )


# -- 2. count-based training equivalence -------------------------------------


def test_acceptance_count_training_equivalence(english_1mb, table_1mb):
    start = time.monotonic()
    stream: list[bytes] = []
    for doc in docs_from_file(english_1mb):
        stream.extend(chunk(doc.text))

    n_merges = 60
    want_tokens, want_merges = naive_bpe(stream, vocab_size=256 + n_merges)
    vocab = train_bpe(table_1mb, TrainerConfig(vocab_size=256 + n_merges))
    bpe_ok = vocab.merges == want_merges and vocab.tokens == want_tokens

    wp_want_tokens, wp_want_merges = naive_wordpiece(
        stream, vocab_size=WORDPIECE_BASE_SIZE + n_merges
    )
    wp_vocab = train_wordpiece(
        table_1mb, TrainerConfig(vocab_size=WORDPIECE_BASE_SIZE + n_merges)
    )
    wp_ok = wp_vocab.merges == wp_want_merges and wp_vocab.tokens == wp_want_tokens
    elapsed = time.monotonic() - start
    _report(
        "count-training-equivalence",
        bpe_ok and wp_ok and elapsed < 120,
        f"1MB fixture, {n_merges} merges each: BPE exact={bpe_ok}, "
        f"WordPiece exact={wp_ok}, {elapsed:.1f}s < 120s",
    )


# -- 3. Viterbi optimality ----------------------------------------------------


def _vocab_200_tokens(table) -> Vocabulary:
    """A 200-token unigram inventory covering the fixture's byte usage."""
    byte_counts: dict[bytes, int] = {}
    sub_counts: dict[bytes, int] = {}
    for chunk_bytes, weight in table.sorted_items():
        for b in chunk_bytes:
            key = bytes([b])
            byte_counts[key] = byte_counts.get(key, 0) + weight
        for i in range(len(chunk_bytes)):
            for ln in range(2, min(8, len(chunk_bytes) - i) + 1):
                sub = chunk_bytes[i : i + ln]
                sub_counts[sub] = sub_counts.get(sub, 0) + weight
    tokens = sorted(byte_counts)
    budget = 200 - len(tokens)
    assert budget > 0, "fixture uses too many distinct bytes"
    ranked = sorted(sub_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    tokens += [sub for sub, _ in ranked[:budget]]
    counts = [byte_counts.get(t) or sub_counts[t] for t in tokens]
    total = sum(counts)
    scores = [math.log(c / total) for c in counts]
    return Vocabulary(algorithm=UNIGRAM, tokens=tokens, scores=scores)


def test_acceptance_viterbi_optimality(table_1mb):
    vocab = _vocab_200_tokens(table_1mb)
    assert len(vocab.tokens) == 200
    lookup = vocab.token_index()
    enc = Encoder(vocab)
    checked = 0
    disagreements = 0
    for chunk_bytes, _ in table_1mb.sorted_items():
        if len(chunk_bytes) > 12:
            continue
        want = exhaustive_best_segmentation(chunk_bytes, lookup, vocab.scores)
        if enc.encode_chunk(chunk_bytes) != want:
            disagreements += 1
        checked += 1
    _report(
        "viterbi-optimality",
        disagreements == 0 and checked > 0,
        f"200-token vocabulary, {checked} chunks <= 12 bytes, "
        f"{disagreements} disagreements (exact equality required)",
    )


# -- 4. metric hand-values ------------------------------------------------


def test_acceptance_metric_hand_values():
    v = Vocabulary(algorithm=BPE, tokens=[b"a", b"b", b"c"])
    v2 = Vocabulary(algorithm=BPE, tokens=[b"b", b"c", b"d"])
    s = lambda counts, size: TokenUsageStats(
        counts=counts, total_tokens=sum(counts.values()), total_bytes=0, vocab_size=size
    )
    plain, _ = M.jaccard(s({0: 1, 1: 1, 2: 1}, 3), s({0: 1, 1: 1, 2: 1}, 3), v, v2)
    eq1_ok = plain == 0.5

    vw = Vocabulary(algorithm=BPE, tokens=[b"a", b"b"])
    _, weighted = M.jaccard(s({0: 1, 1: 1}, 2), s({0: 1, 1: 3}, 2), vw, vw)
    eq2_ok = abs(weighted - 0.6) < 1e-12

    renyi = M.renyi_efficiency(s({0: 7, 1: 1, 2: 1, 3: 1}, 4), M.RenyiParams(2.5))
    renyi_ok = abs(renyi - 0.418) < 1e-3

    labels, _ = M.domain_term_classify(
        {"w": 20, "pad": 980}, {"w": 1, "pad": 999}, M.DomainScoreParams(theta=10)
    )
    domain_ok = labels["w"] == M.DOMAIN_SPECIFIC

    tokens = [bytes([b]) for b in range(256)] + [b"un", b"happiness"]
    scores = [-30.0] * 256 + [-1.0, -1.0]
    uni = Vocabulary(algorithm=UNIGRAM, tokens=tokens, scores=scores)
    gold = M.GoldSegmentation({"unhappiness": ["un", "happi", "ness"]})
    _, _, f1 = M.morph_alignment(uni, gold)
    f1_ok = abs(f1 - 2 / 3) < 1e-9

    _report(
        "metric-hand-values",
        eq1_ok and eq2_ok and renyi_ok and domain_ok and f1_ok,
        f"plain-jaccard={plain} (want 0.5), weighted={weighted:.3f} (want 0.6), "
        f"renyi={renyi:.4f} (want 0.418 +- 1e-3), domain label ok={domain_ok}, "
        f"boundary F1={f1:.6f} (want 2/3 +- 1e-9)",
    )


# -- 5. determinism across workers -------------------------------------------


def _study(cfg: ExperimentConfig, workers: int):
    report = run_scaling_study(cfg, workers=workers)
    assert report.failures == [], report.failures
    with open(os.path.join(cfg.output_dir, "metrics.csv"), "rb") as fp:
        return fp.read()


def test_acceptance_worker_determinism():
    corpus = synth.corpus_file("english_50mb", seed=55, target_bytes=50 * MB)

    def cfg(tag):
        return ExperimentConfig(
            corpus_paths=[corpus],
            schedule_bytes=[10 * MB, 20 * MB, 40 * MB],
            holdout_bytes=5 * MB,
            algorithms=["bpe", "unigram", "wordpiece"],
            vocab_sizes=[1024],
            seed=2024,
            output_dir=os.path.join(synth.CACHE_DIR, f"study_det_{tag}"),
        )

    csv1 = _study(cfg("w1"), workers=1)
    csv8 = _study(cfg("w8"), workers=8)
    _report(
        "worker-determinism",
        csv1 == csv8 and len(csv1) > 0,
        f"50MB corpus, workers 1 vs 8: metrics.csv byte-identical={csv1 == csv8}, "
        f"{len(csv1)} bytes",
    )


# -- 6. qualitative trend reproduction ----------------------------------------


@pytest.fixture(scope="module")
def trend_report():
    corpus = synth.corpus_file("english_big", seed=77, target_bytes=215 * MB)
    cfg = ExperimentConfig(
        corpus_paths=[corpus],
        schedule_bytes=[5 * MB, 10 * MB, 20 * MB, 50 * MB, 100 * MB, 200 * MB],
        slice_labels=["5MB", "10MB", "20MB", "50MB", "100MB", "200MB"],
        holdout_bytes=10 * MB,
        algorithms=["bpe", "unigram", "wordpiece"],
        vocab_sizes=[8192, 16384],
        seed=1234,
        output_dir=os.path.join(synth.CACHE_DIR, "study_trend"),
    )
    start = time.monotonic()
    report = run_scaling_study(cfg)
    return cfg, report, time.monotonic() - start


def _rows_by_cell(report):
    cells: dict[tuple[str, int], list[dict]] = {}
    for row in report.rows:
        cells.setdefault((row["algorithm"], row["vocab_size"]), []).append(row)
    for rows in cells.values():
        rows.sort(key=lambda r: r["slice_bytes"])
    return cells


def test_acceptance_trend_overlap_nondecreasing(trend_report):
    _, report, _ = trend_report
    assert report.failures == [], report.failures
    worst = []
    for (alg, size), rows in _rows_by_cell(report).items():
        overlaps = [r["vocab_overlap"] for r in rows]
        inversions = [
            overlaps[i] - overlaps[i + 1]
            for i in range(len(overlaps) - 1)
            if overlaps[i + 1] < overlaps[i]
        ]
        ok = len(inversions) <= 1 and all(d <= 0.02 for d in inversions)
        worst.append((alg, size, len(inversions), max(inversions, default=0.0), ok))
    all_ok = all(w[4] for w in worst)
    _report(
        "trend-overlap-nondecreasing",
        all_ok,
        "per grid cell at most one inversion of <= 0.02: "
        + "; ".join(f"{a}/{s}: {n} inv, max {m:.4f}" for a, s, n, m, _ in worst),
    )


def test_acceptance_trend_weighted_vs_plain(trend_report):
    _, report, _ = trend_report
    bad = [
        (r["algorithm"], r["vocab_size"], r["slice_label"])
        for r in report.rows
        if r["jaccard_weighted_avg"] < r["jaccard_plain_avg"]
    ]
    _report(
        "trend-weighted-jaccard-dominates",
        not bad,
        f"weighted >= plain on all {len(report.rows)} cells"
        + (f"; violations: {bad}" if bad else ""),
    )


def test_acceptance_trend_coverage_grows_with_vocab(trend_report):
    _, report, _ = trend_report
    cells = _rows_by_cell(report)
    bad = []
    for alg in ("bpe", "unigram", "wordpiece"):
        small = {r["slice_label"]: r["pretoken_cov_count"] for r in cells[(alg, 8192)]}
        large = {r["slice_label"]: r["pretoken_cov_count"] for r in cells[(alg, 16384)]}
        for label in small:
            if large[label] <= small[label]:
                bad.append((alg, label))
    _report(
        "trend-coverage-grows-with-vocab",
        not bad,
        "count-weighted pre-token coverage larger at 16384 than 8192 for every "
        f"(algorithm, slice); violations: {bad or 'none'}",
    )


def test_acceptance_trend_frequency_coverage(trend_report):
    _, report, _ = trend_report
    largest = [r for r in report.rows if r["slice_label"] == "200MB"]
    values = {(r["algorithm"], r["vocab_size"]): r["freq_cov_20"] for r in largest}
    ok = all(v >= 0.75 for v in values.values())
    _report(
        "trend-frequency-coverage",
        ok and len(values) == 6,
        "top 20% of vocabulary covers >= 0.75 of held-out tokens on the largest "
        f"slice: {sorted((k, round(v, 4)) for k, v in values.items())}",
    )


def test_acceptance_trend_plateau_fires(trend_report):
    cfg, report, elapsed = trend_report
    fired = {k: v for k, v in report.plateaus.items() if v is not None}
    _report(
        "trend-plateau-fires",
        len(fired) >= 1 and elapsed < 240 * 60,
        f"Renyi plateau detected for {sorted(fired)} (need >= 1); "
        f"study wall time {elapsed / 60:.1f} min on this machine",
    )


# -- 7. script-generality smoke test ------------------------------------------


def test_acceptance_cyrillic_smoke():
    corpus = synth.corpus_file(
        "cyrillic_20mb", seed=99, target_bytes=22 * MB, script="cyrillic"
    )
    with open(corpus, encoding="utf-8") as fp:
        sample = [next(fp).rstrip("\n") for _ in range(2000)]
    roundtrip_ok = all(b"".join(chunk(line)) == line.encode("utf-8") for line in sample)

    cfg = ExperimentConfig(
        corpus_paths=[corpus],
        schedule_bytes=[5 * MB, 15 * MB],
        holdout_bytes=2 * MB,
        algorithms=["bpe", "unigram", "wordpiece"],
        vocab_sizes=[2000],
        seed=777,
        output_dir=os.path.join(synth.CACHE_DIR, "study_cyrillic"),
    )
    report = run_scaling_study(cfg)
    finite_ok = report.failures == [] and all(
        math.isfinite(row[col])
        for row in report.rows
        for col in (
            "vocab_overlap", "jaccard_plain_avg", "jaccard_weighted_avg",
            "renyi_efficiency", "pretoken_cov_type", "pretoken_cov_count",
            "freq_cov_20", "bytes_per_token",
        )
    )
    _report(
        "cyrillic-smoke",
        roundtrip_ok and finite_ok and len(report.rows) == 6,
        f"20MB Cyrillic corpus: chunk round-trip on {len(sample)} lines="
        f"{roundtrip_ok}, full grid rows={len(report.rows)}, all metrics finite="
        f"{finite_ok}",
    )
