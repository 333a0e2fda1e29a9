"""Tokenizer training and scaling-analysis toolkit."""

__version__ = "0.1.0"

from .corpus import Document, SliceManifest, build_slices, holdout_split, ingest
from .pretokenize import (
    GPT4_PATTERN,
    GPT4_PATTERN_NO_APOSTROPHE,
    PretokenTable,
    chunk,
    count_corpus,
    merge_tables,
)
from .segment import Encoder, TokenUsageStats, decode, encode, encode_table
from .trainers import train_bpe, train_unigram, train_wordpiece
from .vocab import TrainerConfig, Vocabulary

__all__ = [
    "Document",
    "SliceManifest",
    "build_slices",
    "holdout_split",
    "ingest",
    "GPT4_PATTERN",
    "GPT4_PATTERN_NO_APOSTROPHE",
    "PretokenTable",
    "chunk",
    "count_corpus",
    "merge_tables",
    "Encoder",
    "TokenUsageStats",
    "decode",
    "encode",
    "encode_table",
    "train_bpe",
    "train_unigram",
    "train_wordpiece",
    "TrainerConfig",
    "Vocabulary",
]
