"""Byte-escape codec and vocabulary file-format tests."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tokscale.errors import FormatError
from tokscale.escape import escape_bytes, unescape_bytes
from tokscale.vocab import BPE, UNIGRAM, TrainerConfig, Vocabulary, load_vocab, read_vocab, save_vocab


@given(st.binary(max_size=64))
def test_escape_roundtrip(data):
    escaped = escape_bytes(data)
    assert escaped.isprintable() or escaped == ""
    assert "\t" not in escaped and "\n" not in escaped
    assert unescape_bytes(escaped) == data


@pytest.mark.parametrize("bad", ["\\x2", "\\xgg", "\\q", "tab\t"])
def test_unescape_rejects_malformed(bad):
    with pytest.raises(FormatError):
        unescape_bytes(bad)


def test_vocab_roundtrip(tmp_path):
    vocab = Vocabulary(
        algorithm=BPE,
        tokens=[bytes([b]) for b in range(256)] + [b"ab"],
        merges=[(97, 98)],
    )
    path = tmp_path / "v.json"
    save_vocab(vocab, str(path))
    back = load_vocab(str(path))
    assert back == vocab
    assert back.digest() == vocab.digest()


def test_vocab_roundtrip_with_scores(tmp_path):
    vocab = Vocabulary(
        algorithm=UNIGRAM,
        tokens=[b"a", b"\x00\xff", b"\\x"],
        scores=[-0.1, -2.5, -3.25],
    )
    path = tmp_path / "v.json"
    save_vocab(vocab, str(path))
    assert load_vocab(str(path)) == vocab


def test_duplicate_tokens_rejected():
    from io import StringIO

    vocab = Vocabulary(algorithm=BPE, tokens=[b"a", b"b"])
    payload = vocab.serialize().replace('"b"', '"a"')
    with pytest.raises(FormatError):
        read_vocab(StringIO(payload))


def test_unknown_algorithm_rejected():
    with pytest.raises(ValueError):
        Vocabulary(algorithm="huffman", tokens=[b"a"])


def test_trainer_config_validation():
    with pytest.raises(ValueError):
        TrainerConfig(vocab_size=300, unigram_prune_keep_fraction=1.5)
    with pytest.raises(ValueError):
        TrainerConfig(vocab_size=300, max_token_bytes=0)
    assert TrainerConfig(vocab_size=100).effective_unigram_seed_size() == 1124
    assert TrainerConfig(vocab_size=16000).effective_unigram_seed_size() == 64000
