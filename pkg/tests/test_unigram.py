"""UnigramLM trainer tests: inventory shape, score normalization,
determinism and failure modes."""

from __future__ import annotations

import math

import pytest

import synth
from tokscale.errors import TrainingError
from tokscale.pretokenize import PretokenTable, count_corpus
from tokscale.trainers import train_unigram
from tokscale.vocab import TrainerConfig


def _sample_table(n_lines=150, seed=21):
    gen = synth.SynthCorpus(seed, lexicon_size=1500)
    return count_corpus(["\n".join(gen.line() for _ in range(n_lines))])


def test_simple_table_keeps_whole_chunk():
    table = PretokenTable.from_counts({b"ab": 10})
    vocab = train_unigram(table, TrainerConfig(vocab_size=257, unigram_seed_size=300))
    assert len(vocab.tokens) == 257
    assert b"ab" in vocab.tokens


def test_scores_normalize_to_one():
    vocab = train_unigram(_sample_table(), TrainerConfig(vocab_size=300))
    assert math.isclose(math.fsum(math.exp(s) for s in vocab.scores), 1.0, rel_tol=1e-9)
    assert all(s < 0 for s in vocab.scores)


def test_byte_alphabet_never_pruned():
    vocab = train_unigram(_sample_table(), TrainerConfig(vocab_size=280))
    present = set(vocab.tokens)
    assert all(bytes([b]) in present for b in range(256))


def test_exact_vocab_size_and_max_token_bytes():
    cfg = TrainerConfig(vocab_size=320, max_token_bytes=6)
    vocab = train_unigram(_sample_table(), cfg)
    assert len(vocab.tokens) == 320
    assert len(set(vocab.tokens)) == 320
    assert max(len(t) for t in vocab.tokens) <= 6


def test_deterministic():
    cfg = TrainerConfig(vocab_size=300)
    a = train_unigram(_sample_table(), cfg)
    b = train_unigram(_sample_table(), cfg)
    assert a.serialize() == b.serialize()


def test_frequent_words_become_tokens():
    # the function word "the" dominates any latin-script sample
    vocab = train_unigram(_sample_table(n_lines=400), TrainerConfig(vocab_size=500))
    assert b"the" in vocab.tokens or b" the" in vocab.tokens


def test_empty_table_rejected():
    with pytest.raises(TrainingError):
        train_unigram(PretokenTable(), TrainerConfig(vocab_size=300))


def test_vocab_below_byte_alphabet():
    with pytest.raises(TrainingError):
        train_unigram(_sample_table(), TrainerConfig(vocab_size=255))


def test_seed_must_exceed_vocab():
    with pytest.raises(TrainingError):
        train_unigram(
            _sample_table(), TrainerConfig(vocab_size=300, unigram_seed_size=300)
        )


def test_too_few_candidates_reports_achieved():
    table = PretokenTable.from_counts({b"ab": 5})
    with pytest.raises(TrainingError) as exc:
        train_unigram(table, TrainerConfig(vocab_size=600, unigram_seed_size=700))
    assert exc.value.achieved == 257
