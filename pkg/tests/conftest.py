"""Shared fixtures: cached synthetic corpora and their pre-token tables.

Expensive artifacts live in a cache directory shared across runs (see
``synth.CACHE_DIR``), so repeated test invocations reuse them.
"""

from __future__ import annotations

import os

import pytest

import synth
from tokscale.corpus import Document
from tokscale.pretokenize import PretokenTable, count_corpus, load_table, save_table


def docs_from_file(path: str):
    with open(path, "r", encoding="utf-8") as fp:
        for i, line in enumerate(fp):
            yield Document(id=f"0:{i}", text=line.rstrip("\n"))


def cached_table(name: str, corpus_path: str, workers: int = 1) -> PretokenTable:
    cache = os.path.join(synth.CACHE_DIR, f"{name}.table.tsv")
    if os.path.exists(cache):
        return load_table(cache)
    table = count_corpus(docs_from_file(corpus_path), workers)
    save_table(table, cache)
    return table


@pytest.fixture(scope="session")
def english_1mb() -> str:
    return synth.corpus_file("english", seed=101, target_bytes=1_000_000)


@pytest.fixture(scope="session")
def table_1mb(english_1mb) -> PretokenTable:
    return cached_table("english_1mb", english_1mb)
