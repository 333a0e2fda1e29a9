"""Scaling-study orchestration: cumulative slices, the full
algorithm x vocabulary-size x slice grid, metric evaluation against the
largest-slice reference, plateau detection and canonical CSV output.

Intermediate artifacts (pre-token tables, vocabularies, usage stats)
are cached under the output directory, keyed by content digests, so
re-runs skip completed cells.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Sequence

from . import metrics as M
from .corpus import PLAIN_LINES, _range_hash, build_slices, holdout_split, ingest, save_manifest
from .errors import FormatError, MetricError, TokscaleError
from .pretokenize import (
    GPT4_PATTERN,
    GPT4_PATTERN_NO_APOSTROPHE,
    PretokenTable,
    count_corpus,
    load_table,
    merge_tables,
    save_table,
)
from .segment import encode_table, load_stats, save_stats
from .trainers import train_bpe, train_unigram, train_wordpiece
from .vocab import BPE, UNIGRAM, WORDPIECE, TrainerConfig, Vocabulary, load_vocab, save_vocab

CSV_COLUMNS = [
    "algorithm",
    "vocab_size",
    "slice_label",
    "slice_bytes",
    "vocab_overlap",
    "jaccard_plain_avg",
    "jaccard_weighted_avg",
    "renyi_efficiency",
    "pretoken_cov_type",
    "pretoken_cov_count",
    "freq_cov_20",
    "morph_f1",
    "cognitive_corr",
    "bytes_per_token",
]

_PATTERN_VARIANTS = {
    "canonical": GPT4_PATTERN,
    "no-apostrophe": GPT4_PATTERN_NO_APOSTROPHE,
}

_TRAINERS = {BPE: train_bpe, UNIGRAM: train_unigram, WORDPIECE: train_wordpiece}


@dataclass
class ExperimentConfig:
    corpus_paths: list[str]
    schedule_bytes: list[int]
    holdout_bytes: int
    algorithms: list[str]
    vocab_sizes: list[int]
    seed: int
    output_dir: str
    corpus_format: str = PLAIN_LINES
    dedup: bool = False
    slice_labels: list[str] | None = None
    trainer: dict = field(default_factory=dict)
    renyi_alpha: float = 2.5
    eval_domains: dict[str, str] = field(default_factory=dict)
    gold_path: str | None = None
    cognitive_path: str | None = None
    pretokenizer: str = "canonical"
    plateau_rel_threshold: float = 0.005
    plateau_window: int = 2

    def __post_init__(self) -> None:
        if not self.algorithms:
            raise ValueError("algorithms must be non-empty")
        if not self.vocab_sizes:
            raise ValueError("vocab_sizes must be non-empty")
        if any(b <= a for a, b in zip(self.schedule_bytes, self.schedule_bytes[1:])):
            raise ValueError("schedule_bytes must be strictly increasing")
        unknown = set(self.algorithms) - set(_TRAINERS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if self.pretokenizer not in _PATTERN_VARIANTS:
            raise ValueError(f"unknown pretokenizer variant {self.pretokenizer!r}")
        if self.seed is None:
            raise ValueError("seed is required")

    @property
    def pattern(self) -> str:
        return _PATTERN_VARIANTS[self.pretokenizer]

    def labels(self) -> list[str]:
        if self.slice_labels is not None:
            return list(self.slice_labels)
        return [str(t) for t in self.schedule_bytes]

    def to_dict(self) -> dict:
        return {
            "corpus_paths": self.corpus_paths,
            "corpus_format": self.corpus_format,
            "dedup": self.dedup,
            "schedule_bytes": self.schedule_bytes,
            "slice_labels": self.slice_labels,
            "holdout_bytes": self.holdout_bytes,
            "algorithms": self.algorithms,
            "vocab_sizes": self.vocab_sizes,
            "trainer": self.trainer,
            "renyi_alpha": self.renyi_alpha,
            "eval_domains": self.eval_domains,
            "gold_path": self.gold_path,
            "cognitive_path": self.cognitive_path,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "pretokenizer": self.pretokenizer,
            "plateau_rel_threshold": self.plateau_rel_threshold,
            "plateau_window": self.plateau_window,
        }

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fp:
            try:
                payload = json.load(fp)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: malformed config: {exc}")
        known = {k for k in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise FormatError(f"{path}: unknown config keys: {sorted(unknown)}")
        if "seed" not in payload:
            raise FormatError(f"{path}: config must set a seed")
        try:
            return cls(**payload)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}")


@dataclass
class MetricsReport:
    rows: list[dict] = field(default_factory=list)
    overlap_matrices: dict[tuple[str, int], tuple[list[str], list[list[float]]]] = field(
        default_factory=dict
    )
    failures: list[dict] = field(default_factory=list)
    plateaus: dict[str, str | None] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    artifact_digests: dict[str, str] = field(default_factory=dict)


def detect_plateau(
    series: Sequence[tuple[float, float]], rel_threshold: float, window: int
) -> int | None:
    """Index of the earliest point after which the relative change stays
    below ``rel_threshold`` for ``window`` consecutive steps."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(series) < window + 1:
        raise ValueError(f"need at least {window + 1} points, got {len(series)}")
    values = [v for _, v in series]
    if all(v == 0 for v in values):
        raise MetricError("degenerate series: all values zero")
    for i in range(len(values) - window):
        ok = True
        for k in range(i, i + window):
            prev, nxt = values[k], values[k + 1]
            if prev == 0:
                if nxt != 0:
                    ok = False
                    break
            elif abs(nxt - prev) / abs(prev) >= rel_threshold:
                ok = False
                break
        if ok:
            return i
    return None


def _subseed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _digest(*parts: str) -> str:
    return hashlib.sha256("\x00".join(parts).encode("utf-8")).hexdigest()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _ArtifactStore:
    """Digest-keyed file cache under the output directory."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        for sub in ("tables", "vocabs", "stats"):
            os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
        self.digests: dict[str, str] = {}

    def _path(self, sub: str, name: str, key: str, ext: str) -> str:
        return os.path.join(self.out_dir, sub, f"{name}_{key[:12]}{ext}")

    def table(self, name: str, key: str, build) -> PretokenTable:
        path = self._path("tables", name, key, ".tsv")
        if os.path.exists(path):
            table = load_table(path)
        else:
            table = build()
            save_table(table, path)
        self.digests[os.path.relpath(path, self.out_dir)] = key
        return table

    def vocab(self, name: str, key: str, build) -> Vocabulary:
        path = self._path("vocabs", name, key, ".json")
        if os.path.exists(path):
            vocab = load_vocab(path)
        else:
            vocab = build()
            save_vocab(vocab, path)
        self.digests[os.path.relpath(path, self.out_dir)] = key
        return vocab

    def stats(self, name: str, key: str, build):
        path = self._path("stats", name, key, ".tsv")
        if os.path.exists(path):
            stats = load_stats(path)
        else:
            stats = build()
            save_stats(stats, path)
        self.digests[os.path.relpath(path, self.out_dir)] = key
        return stats


def run_scaling_study(cfg: ExperimentConfig, workers: int = 1) -> MetricsReport:
    """Run the full grid and return (and persist) the metrics report."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    store = _ArtifactStore(cfg.output_dir)
    labels = cfg.labels()

    docs = list(ingest(cfg.corpus_paths, cfg.corpus_format, cfg.dedup))
    if cfg.holdout_bytes > 0:
        train_docs, holdout_docs = holdout_split(
            docs, cfg.holdout_bytes, _subseed(cfg.seed, "holdout")
        )
    else:
        train_docs, holdout_docs = docs, []
    manifest = build_slices(
        train_docs, cfg.schedule_bytes, _subseed(cfg.seed, "slices"), labels
    )
    save_manifest(manifest, os.path.join(cfg.output_dir, "slices.json"))
    docs_by_id = {d.id: d for d in train_docs}

    # Cumulative tables: count each delta once and merge forward.
    tables: dict[str, str] = {}  # label -> table cache key
    prev_table: PretokenTable | None = None
    prev_hi = 0
    for sl in manifest.slices:
        key = _digest("table", sl.content_hash, cfg.pretokenizer)
        lo, hi = sl.doc_range
        delta_ids = manifest.order[prev_hi:hi]

        def build(delta_ids=delta_ids, prev=prev_table):
            delta = count_corpus(
                (docs_by_id[i] for i in delta_ids), workers, cfg.pattern
            )
            return merge_tables(prev, delta) if prev is not None else delta

        prev_table = store.table(sl.label, key, build)
        if prev_table.total_bytes != sl.achieved_bytes:
            raise TokscaleError(
                f"slice {sl.label}: table bytes {prev_table.total_bytes} != "
                f"achieved {sl.achieved_bytes}"
            )
        tables[sl.label] = key
        prev_hi = hi
    del prev_table

    # Evaluation substrates: the holdout (or the largest slice when no
    # holdout was requested) plus any configured domain corpora.
    if holdout_docs:
        holdout_key = _digest("holdout", _range_hash(holdout_docs), cfg.pretokenizer)
        eval_table = store.table(
            "holdout", holdout_key, lambda: count_corpus(holdout_docs, workers, cfg.pattern)
        )
    else:
        eval_table = load_table(
            os.path.join(
                cfg.output_dir, "tables",
                f"{labels[-1]}_{tables[labels[-1]][:12]}.tsv",
            )
        )
        holdout_key = tables[labels[-1]]
    domain_tables: dict[str, tuple[str, PretokenTable]] = {}
    for domain in sorted(cfg.eval_domains):
        path = cfg.eval_domains[domain]
        with open(path, "rb") as fp:
            file_digest = hashlib.sha256(fp.read()).hexdigest()
        key = _digest("domain", domain, file_digest, cfg.pretokenizer)
        domain_tables[domain] = (
            key,
            store.table(
                f"domain_{domain}",
                key,
                lambda path=path: count_corpus(ingest([path], PLAIN_LINES), workers, cfg.pattern),
            ),
        )

    gold = None
    if cfg.gold_path:
        with open(cfg.gold_path, "r", encoding="utf-8") as fp:
            gold = M.read_gold_segmentation(fp)
    lexicon = None
    if cfg.cognitive_path:
        with open(cfg.cognitive_path, "r", encoding="utf-8") as fp:
            lexicon = M.read_cognitive_lexicon(fp)

    report = MetricsReport(config=cfg.to_dict())
    ref_label = labels[-1]

    def train_cell(alg: str, size: int, label: str) -> Vocabulary:
        trainer_cfg = TrainerConfig(vocab_size=size, **cfg.trainer)
        key = _digest(
            "vocab", alg, str(size), json.dumps(trainer_cfg.to_dict(), sort_keys=True),
            tables[label],
        )
        table_path = os.path.join(
            cfg.output_dir, "tables", f"{label}_{tables[label][:12]}.tsv"
        )
        return store.vocab(
            f"{alg}_{size}_{label}",
            key,
            lambda: _TRAINERS[alg](load_table(table_path), trainer_cfg),
        )

    def eval_stats(alg, size, label, vocab, eval_name, eval_key, table):
        key = _digest("stats", vocab.digest(), eval_key)
        return store.stats(
            f"{alg}_{size}_{label}_{eval_name}",
            key,
            lambda: encode_table(vocab, table, cfg.pattern),
        )

    token_sets: dict[tuple[str, int], list[tuple[str, frozenset]]] = {}
    renyi_series: dict[tuple[str, int], list[tuple[float, float]]] = {}

    for alg in cfg.algorithms:
        for size in cfg.vocab_sizes:
            try:
                ref_vocab = train_cell(alg, size, ref_label)
                ref_holdout = eval_stats(
                    alg, size, ref_label, ref_vocab, "holdout", holdout_key, eval_table
                )
                ref_domains = {
                    d: eval_stats(alg, size, ref_label, ref_vocab, d, k, t)
                    for d, (k, t) in domain_tables.items()
                }
            except TokscaleError as exc:
                for sl in manifest.slices:
                    report.failures.append(
                        {"algorithm": alg, "vocab_size": size,
                         "slice_label": sl.label, "error": str(exc)}
                    )
                continue
            for sl in manifest.slices:
                try:
                    vocab = train_cell(alg, size, sl.label)
                    holdout_stats = eval_stats(
                        alg, size, sl.label, vocab, "holdout", holdout_key, eval_table
                    )
                    slice_table = load_table(
                        os.path.join(
                            cfg.output_dir, "tables",
                            f"{sl.label}_{tables[sl.label][:12]}.tsv",
                        )
                    )
                    plains: list[float] = []
                    weighteds: list[float] = []
                    if domain_tables:
                        for d, (k, t) in domain_tables.items():
                            stats_d = eval_stats(alg, size, sl.label, vocab, d, k, t)
                            p, w = M.jaccard(stats_d, ref_domains[d], vocab, ref_vocab)
                            plains.append(p)
                            weighteds.append(w)
                    else:
                        p, w = M.jaccard(holdout_stats, ref_holdout, vocab, ref_vocab)
                        plains.append(p)
                        weighteds.append(w)
                    cov_type, cov_count = M.pretoken_coverage(vocab, slice_table)
                    renyi = M.renyi_efficiency(
                        holdout_stats, M.RenyiParams(alpha=cfg.renyi_alpha)
                    )
                    row = {
                        "algorithm": alg,
                        "vocab_size": size,
                        "slice_label": sl.label,
                        "slice_bytes": sl.achieved_bytes,
                        "vocab_overlap": M.vocab_overlap(vocab, ref_vocab),
                        "jaccard_plain_avg": sum(plains) / len(plains),
                        "jaccard_weighted_avg": sum(weighteds) / len(weighteds),
                        "renyi_efficiency": renyi,
                        "pretoken_cov_type": cov_type,
                        "pretoken_cov_count": cov_count,
                        "freq_cov_20": M.frequency_coverage(holdout_stats, 0.2),
                        "morph_f1": (
                            M.morph_alignment(vocab, gold)[2] if gold else None
                        ),
                        "cognitive_corr": (
                            M.cognitive_correlation(vocab, lexicon) if lexicon else None
                        ),
                        "bytes_per_token": holdout_stats.total_bytes
                        / holdout_stats.total_tokens,
                    }
                    report.rows.append(row)
                    token_sets.setdefault((alg, size), []).append(
                        (sl.label, vocab.token_set())
                    )
                    renyi_series.setdefault((alg, size), []).append(
                        (float(sl.achieved_bytes), renyi)
                    )
                except TokscaleError as exc:
                    report.failures.append(
                        {"algorithm": alg, "vocab_size": size,
                         "slice_label": sl.label, "error": str(exc)}
                    )

    for (alg, size), entries in token_sets.items():
        slice_labels = [label for label, _ in entries]
        n = len(entries)
        matrix = [[1.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                shared = len(entries[i][1] & entries[j][1]) / size
                matrix[i][j] = matrix[j][i] = shared
        report.overlap_matrices[(alg, size)] = (slice_labels, matrix)

    for (alg, size), series in renyi_series.items():
        name = f"{alg}_{size}"
        try:
            idx = detect_plateau(series, cfg.plateau_rel_threshold, cfg.plateau_window)
        except (ValueError, MetricError):
            idx = None
        report.plateaus[name] = (
            token_sets[(alg, size)][idx][0] if idx is not None else None
        )

    report.artifact_digests = dict(store.digests)
    emit_report(report, cfg.output_dir)
    return report


def emit_report(report: MetricsReport, out_dir: str) -> list[str]:
    """Write metrics.csv, per-grid overlap matrices and the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    csv_path = os.path.join(out_dir, "metrics.csv")
    tmp = f"{csv_path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    os.replace(tmp, csv_path)
    written.append(csv_path)

    for (alg, size), (labels, matrix) in sorted(report.overlap_matrices.items()):
        path = os.path.join(out_dir, f"overlap_matrix_{alg}_{size}.csv")
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(["slice"] + labels)
            for label, row in zip(labels, matrix):
                writer.writerow([label] + [repr(v) for v in row])
        os.replace(tmp, path)
        written.append(path)

    manifest_path = os.path.join(out_dir, "manifest.json")
    tmp = f"{manifest_path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fp:
        json.dump(
            {
                "config": report.config,
                "artifacts": report.artifact_digests,
                "failures": report.failures,
                "plateaus": report.plateaus,
                "rows": len(report.rows),
            },
            fp,
            indent=1,
            sort_keys=True,
        )
        fp.write("\n")
    os.replace(tmp, manifest_path)
    written.append(manifest_path)
    return written


def read_metrics_csv(path: str) -> list[dict]:
    """Parse metrics.csv back into typed rows."""
    rows: list[dict] = []
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames != CSV_COLUMNS:
            raise FormatError(f"{path}: unexpected columns {reader.fieldnames}")
        for raw in reader:
            row: dict = {}
            for col in CSV_COLUMNS:
                value = raw[col]
                if col in ("algorithm", "slice_label"):
                    row[col] = value
                elif col in ("vocab_size", "slice_bytes"):
                    row[col] = int(value)
                else:
                    row[col] = float(value) if value != "" else None
            rows.append(row)
    return rows
