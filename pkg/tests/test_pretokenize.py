"""Pre-tokenizer tests: spec'd chunkings, differential fuzz against the
hand-written backtracking matcher, conservation, worker independence and
the table file format."""

from __future__ import annotations

import random
import unicodedata
from io import StringIO

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokscale.errors import CountOverflowError, FormatError, IngestError
from tokscale.pretokenize import (
    GPT4_PATTERN,
    GPT4_PATTERN_NO_APOSTROPHE,
    PretokenTable,
    chunk,
    count_corpus,
    merge_tables,
    read_table,
    write_table,
)
from tokscale.reference import reference_chunk


class TestChunkExamples:
    def test_hello_world(self):
        assert chunk("Hello world") == [b"Hello", b" world"]

    def test_digit_runs_max_three(self):
        assert chunk("1234") == [b"123", b"4"]

    def test_contraction(self):
        assert chunk("don't stop") == [b"don", b"'t", b" stop"]

    def test_empty(self):
        assert chunk("") == []

    def test_trailing_spaces_split_before_word(self):
        # the lookahead branch keeps the final space attached to the word
        assert chunk("a  b") == [b"a", b" ", b" b"]

    def test_crlf_grouping(self):
        assert b"".join(chunk("line one\r\nline two\n")) == "line one\r\nline two\n".encode()


# ---------------------------------------------------------------------------
# Differential fuzzing. Strings are built from pools that exercise every
# branch of the pattern: contractions, mixed scripts, digit runs,
# punctuation clusters, newlines and exotic-but-assigned codepoints.

_WORDS = ["Hello", "world", "don't", "I'LL", "we've", "they're", "it's", "naïve",
          "café", "Zürich", "ſtop", "o'clock", "CAN'T", "won'T"]
_DIGITS = ["0", "42", "123", "1234", "98765", "١٢٣", "೧೨೩", "2024"]
_PUNCT = ["!", "!!", "...", "?!", "---", "#$%", "(", "))", "«»", "—", "“”"]
_SPACES = [" ", "  ", "\t", "\n", "\r\n", "\n\n", " \n", "\t\t", " ", " "]
_OTHER_SCRIPTS = ["привет", "Мир", "γειά", "שלום", "مرحبا", "こんにちは", "汉字",
                  "한국어", "🙂🙂", "👍🏽", "éé", "‍", "ß"]


def _assigned_codepoints() -> list[str]:
    out = []
    for cp in list(range(0x20, 0x3000)) + list(range(0x1F300, 0x1F400)):
        ch = chr(cp)
        if unicodedata.category(ch) != "Cn" and not (0xD800 <= cp <= 0xDFFF):
            out.append(ch)
    return out


_ASSIGNED = _assigned_codepoints()


def _random_string(rng: random.Random) -> str:
    parts = []
    for _ in range(rng.randint(1, 14)):
        roll = rng.random()
        if roll < 0.3:
            parts.append(rng.choice(_WORDS))
        elif roll < 0.45:
            parts.append(rng.choice(_DIGITS))
        elif roll < 0.6:
            parts.append(rng.choice(_PUNCT))
        elif roll < 0.78:
            parts.append(rng.choice(_SPACES))
        elif roll < 0.88:
            parts.append(rng.choice(_OTHER_SCRIPTS))
        else:
            parts.append("".join(rng.choice(_ASSIGNED) for _ in range(rng.randint(1, 5))))
    return "".join(parts)


@pytest.mark.parametrize(
    "pattern,apostrophe,n_strings",
    [(GPT4_PATTERN, True, 10_000), (GPT4_PATTERN_NO_APOSTROPHE, False, 2_000)],
    ids=["canonical", "no-apostrophe"],
)
def test_differential_fuzz_matches_reference(pattern, apostrophe, n_strings):
    rng = random.Random(0xC0FFEE)
    for _ in range(n_strings):
        text = _random_string(rng)
        got = chunk(text, pattern)
        want = reference_chunk(text, apostrophe=apostrophe)
        assert got == want, f"divergence on {text!r}"
        assert b"".join(got) == text.encode("utf-8")


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=120))
def test_chunks_nonempty_and_conserving(text):
    parts = chunk(text)
    assert all(parts)
    assert b"".join(parts) == text.encode("utf-8")


# ---------------------------------------------------------------------------
# Counting and tables.


def test_count_corpus_totals_conserve_bytes():
    docs = ["Hello world", "don't stop", "12345 ok"]
    table = count_corpus(docs)
    assert table.total_bytes == sum(len(d.encode()) for d in docs)
    assert table.total_count == sum(c for c in table.entries.values())
    assert table.entries[b"Hello"] == 1
    assert table.entries[b"'t"] == 1


def test_count_corpus_worker_independent(english_1mb):
    docs1 = _first_lines(english_1mb, 3000)
    t1 = count_corpus(docs1, workers=1, batch_chars=10_000)
    t4 = count_corpus(_first_lines(english_1mb, 3000), workers=4, batch_chars=10_000)
    assert t1.entries == t4.entries
    assert (t1.total_count, t1.total_bytes) == (t4.total_count, t4.total_bytes)


def _first_lines(path, n):
    with open(path, encoding="utf-8") as fp:
        return [line.rstrip("\n") for _, line in zip(range(n), fp)]


def test_count_corpus_surrogate_rejected():
    class Doc:
        id = "7:3"
        text = "bad \ud800 doc"

    with pytest.raises(IngestError, match="7:3"):
        count_corpus([Doc()])


def test_merge_tables_pointwise():
    a = PretokenTable.from_counts({b"x": 2, b"y": 1})
    b = PretokenTable.from_counts({b"y": 5, b"z": 3})
    m = merge_tables(a, b)
    assert m.entries == {b"x": 2, b"y": 6, b"z": 3}
    assert m.total_count == 11
    assert m.total_bytes == 11


def test_count_overflow():
    a = PretokenTable.from_counts({b"x": 2**63 - 2})
    with pytest.raises(CountOverflowError):
        a.add(b"x", 5)
    b = PretokenTable.from_counts({b"x": 10})
    with pytest.raises(CountOverflowError):
        merge_tables(a, b)


def test_table_roundtrip_weird_bytes():
    table = PretokenTable.from_counts(
        {b"plain": 3, b" lead": 1, b"\x00\xff\n\t": 7, "héllo".encode(): 2, b"\\x00": 1}
    )
    buf = StringIO()
    write_table(table, buf)
    buf.seek(0)
    back = read_table(buf)
    assert back.entries == table.entries
    assert back.total_count == table.total_count
    assert back.total_bytes == table.total_bytes


@pytest.mark.parametrize(
    "content",
    [
        "not a table\n",
        "#pretoken-table\tentries=1\ttotal_count=1\ttotal_bytes=1\nx\t0\n",
        "#pretoken-table\tentries=2\ttotal_count=2\ttotal_bytes=2\nx\t1\nx\t1\n",
        "#pretoken-table\tentries=1\ttotal_count=5\ttotal_bytes=1\nx\t1\n",
        "#pretoken-table\tentries=1\ttotal_count=1\ttotal_bytes=1\nx\n",
    ],
    ids=["bad-magic", "zero-count", "duplicate", "total-mismatch", "malformed-line"],
)
def test_table_rejects_malformed(content):
    with pytest.raises(FormatError):
        read_table(StringIO(content))
