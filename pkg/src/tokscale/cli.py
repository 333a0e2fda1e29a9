"""Command-line surface: each pipeline stage independently, plus the
full scaling study. Every subcommand is a thin adapter over the library;
usage errors exit 2, data errors exit 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from . import metrics as M
from .corpus import JSON_LINES, PLAIN_LINES, Document, ingest
from .errors import TokscaleError
from .experiment import (
    CSV_COLUMNS,
    ExperimentConfig,
    detect_plateau,
    read_metrics_csv,
    run_scaling_study,
)
from .pretokenize import (
    GPT4_PATTERN,
    GPT4_PATTERN_NO_APOSTROPHE,
    chunk,
    count_corpus,
    load_table,
    save_table,
    write_table,
)
from .escape import escape_bytes
from .segment import Encoder, encode_table, load_stats, save_stats
from .trainers import train_bpe, train_unigram, train_wordpiece
from .vocab import BPE, UNIGRAM, WORDPIECE, TrainerConfig, load_vocab, save_vocab

_PATTERNS = {"canonical": GPT4_PATTERN, "no-apostrophe": GPT4_PATTERN_NO_APOSTROPHE}
_TRAINERS = {BPE: train_bpe, UNIGRAM: train_unigram, WORDPIECE: train_wordpiece}

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _read_text(spec: str) -> str:
    if spec == "-":
        return sys.stdin.read()
    with open(spec, "r", encoding="utf-8") as fp:
        return fp.read()


def _add_pattern_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--pattern",
        choices=sorted(_PATTERNS),
        default="canonical",
        help="pre-tokenizer variant (default: canonical)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokscale",
        description="Tokenizer training and scaling-analysis toolkit.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=(
            f"tokscale {__version__} (trainer defaults: "
            f"{json.dumps({k: v for k, v in TrainerConfig(vocab_size=0).to_dict().items() if k != 'vocab_size'})})"
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("pretok", help="pre-tokenize text or count a corpus")
    p.add_argument("paths", nargs="*", help="corpus files ('-' for stdin)")
    p.add_argument("--text", help="pre-tokenize this string and print its chunks")
    p.add_argument("--format", choices=[PLAIN_LINES, JSON_LINES], default=PLAIN_LINES)
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "-o", help="table output path (default: stdout)")
    _add_pattern_flag(p)

    p = sub.add_parser("train", help="train a vocabulary from a pre-token table")
    p.add_argument("table", help="pre-token table path ('-' for stdin)")
    p.add_argument("--algorithm", choices=sorted(_TRAINERS), required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--output", "-o", required=True, help="vocabulary output path")
    p.add_argument("--max-token-bytes", type=int, default=16)
    p.add_argument("--unigram-seed-size", type=int, default=0)
    p.add_argument("--unigram-prune-keep-fraction", type=float, default=0.75)
    p.add_argument("--unigram-em-iterations-per-round", type=int, default=2)
    p.add_argument("--wordpiece-min-pair-count", type=int, default=2)

    p = sub.add_parser("encode", help="encode text under a vocabulary")
    p.add_argument("--vocab", required=True)
    p.add_argument("--text", help="encode this string")
    p.add_argument("--file", help="encode this file ('-' for stdin)")
    _add_pattern_flag(p)

    p = sub.add_parser("eval", help="metrics for one vocabulary")
    p.add_argument("--vocab", required=True)
    p.add_argument("--stats", help="token-usage stats file")
    p.add_argument("--table", help="pre-token table to encode into usage stats")
    p.add_argument("--save-stats", help="write computed usage stats here")
    p.add_argument("--renyi", type=float, metavar="ALPHA", help="Renyi efficiency")
    p.add_argument("--shannon", action="store_true", help="Shannon efficiency")
    p.add_argument("--freq-cov", type=float, metavar="FRACTION")
    p.add_argument("--pretoken-coverage", action="store_true")
    p.add_argument("--bytes-per-token", action="store_true")
    p.add_argument("--morph", metavar="GOLD", help="gold segmentation file")
    p.add_argument("--cognitive", metavar="LEXICON", help="cognitive lexicon file")
    p.add_argument(
        "--domain-terms",
        nargs=2,
        metavar=("DOMAIN_TABLE", "GENERAL_TABLE"),
        help="classify tokens by domain-specificity score",
    )
    _add_pattern_flag(p)

    p = sub.add_parser("compare", help="overlap and Jaccard between two vocabularies")
    p.add_argument("--vocab-a", required=True)
    p.add_argument("--vocab-b", required=True)
    p.add_argument("--stats-a")
    p.add_argument("--stats-b")

    p = sub.add_parser("study", help="run the full scaling study")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--output-dir", help="override the config output directory")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("plateau", help="find the saturation point in a metrics CSV")
    p.add_argument("csv", help="metrics.csv from a study")
    p.add_argument("--column", required=True, choices=CSV_COLUMNS[4:])
    p.add_argument("--threshold", type=float, default=0.005)
    p.add_argument("--window", type=int, default=2)

    return parser


# -- subcommand bodies ------------------------------------------------------


def _cmd_pretok(args) -> int:
    pattern = _PATTERNS[args.pattern]
    if args.text is not None:
        for part in chunk(args.text, pattern):
            print(escape_bytes(part))
        return EXIT_OK
    if not args.paths:
        print("pretok: need --text or at least one corpus path", file=sys.stderr)
        return EXIT_USAGE
    if args.paths == ["-"]:
        docs = (
            Document(id=f"0:{i}", text=line)
            for i, line in enumerate(sys.stdin.read().splitlines())
        )
    else:
        docs = ingest(args.paths, args.format, args.dedup)
    table = count_corpus(docs, args.workers, pattern)
    if args.output:
        save_table(table, args.output)
    else:
        write_table(table, sys.stdout)
    return EXIT_OK


def _cmd_train(args) -> int:
    if args.table == "-":
        from io import StringIO

        from .pretokenize import read_table

        table = read_table(StringIO(sys.stdin.read()))
    else:
        table = load_table(args.table)
    cfg = TrainerConfig(
        vocab_size=args.vocab_size,
        unigram_seed_size=args.unigram_seed_size,
        unigram_prune_keep_fraction=args.unigram_prune_keep_fraction,
        unigram_em_iterations_per_round=args.unigram_em_iterations_per_round,
        wordpiece_min_pair_count=args.wordpiece_min_pair_count,
        max_token_bytes=args.max_token_bytes,
    )
    vocab = _TRAINERS[args.algorithm](table, cfg)
    save_vocab(vocab, args.output)
    print(f"trained {args.algorithm} vocabulary of {len(vocab.tokens)} tokens")
    return EXIT_OK


def _cmd_encode(args) -> int:
    if (args.text is None) == (args.file is None):
        print("encode: need exactly one of --text/--file", file=sys.stderr)
        return EXIT_USAGE
    vocab = load_vocab(args.vocab)
    text = args.text if args.text is not None else _read_text(args.file)
    ids = Encoder(vocab, _PATTERNS[args.pattern]).encode(text)
    print(" ".join(str(i) for i in ids))
    return EXIT_OK


def _cmd_eval(args) -> int:
    vocab = load_vocab(args.vocab)
    stats = None
    table = load_table(args.table) if args.table else None
    if args.stats:
        stats = load_stats(args.stats)
    elif table is not None:
        stats = encode_table(vocab, table, _PATTERNS[args.pattern])
        if args.save_stats:
            save_stats(stats, args.save_stats)

    def need_stats():
        if stats is None:
            raise TokscaleError("this metric needs --stats or --table")
        return stats

    if args.renyi is not None:
        value = M.renyi_efficiency(need_stats(), M.RenyiParams(alpha=args.renyi))
        print(f"renyi_efficiency\t{value!r}")
    if args.shannon:
        print(f"shannon_efficiency\t{M.shannon_efficiency(need_stats())!r}")
    if args.freq_cov is not None:
        print(f"frequency_coverage\t{M.frequency_coverage(need_stats(), args.freq_cov)!r}")
    if args.pretoken_coverage:
        if table is None:
            raise TokscaleError("--pretoken-coverage needs --table")
        cov_type, cov_count = M.pretoken_coverage(vocab, table)
        print(f"pretoken_cov_type\t{cov_type!r}")
        print(f"pretoken_cov_count\t{cov_count!r}")
    if args.bytes_per_token:
        st = need_stats()
        print(f"bytes_per_token\t{st.total_bytes / st.total_tokens!r}")
    if args.morph:
        with open(args.morph, "r", encoding="utf-8") as fp:
            gold = M.read_gold_segmentation(fp)
        precision, recall, f1 = M.morph_alignment(vocab, gold)
        print(f"morph_precision\t{precision!r}")
        print(f"morph_recall\t{recall!r}")
        print(f"morph_f1\t{f1!r}")
    if args.cognitive:
        with open(args.cognitive, "r", encoding="utf-8") as fp:
            lexicon = M.read_cognitive_lexicon(fp)
        print(f"cognitive_corr\t{M.cognitive_correlation(vocab, lexicon)!r}")
    if args.domain_terms:
        tf_domain = _term_frequencies(load_table(args.domain_terms[0]))
        tf_general = _term_frequencies(load_table(args.domain_terms[1]))
        _, summary = M.domain_term_classify(tf_domain, tf_general, M.DomainScoreParams())
        for key in sorted(summary):
            print(f"domain_{key}\t{summary[key]!r}")
    return EXIT_OK


def _term_frequencies(table) -> dict[str, int]:
    """Chunk counts as whitespace-stripped term frequencies."""
    freqs: dict[str, int] = {}
    for chunk_bytes, count in table.entries.items():
        term = chunk_bytes.decode("utf-8", errors="replace").strip()
        if term:
            freqs[term] = freqs.get(term, 0) + count
    return freqs


def _cmd_compare(args) -> int:
    vocab_a = load_vocab(args.vocab_a)
    vocab_b = load_vocab(args.vocab_b)
    print(f"vocab_overlap\t{M.vocab_overlap(vocab_a, vocab_b)!r}")
    if args.stats_a and args.stats_b:
        stats_a = load_stats(args.stats_a)
        stats_b = load_stats(args.stats_b)
        plain, weighted = M.jaccard(stats_a, stats_b, vocab_a, vocab_b)
        print(f"jaccard_plain\t{plain!r}")
        print(f"jaccard_weighted\t{weighted!r}")
    elif args.stats_a or args.stats_b:
        print("compare: --stats-a and --stats-b go together", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _cmd_study(args) -> int:
    if not os.path.exists(args.config):
        print(f"study: config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    with open(args.config, "r", encoding="utf-8") as fp:
        payload = json.load(fp)
    if args.seed is not None:
        payload["seed"] = args.seed
    if "seed" not in payload or payload["seed"] is None:
        print("study: a seed is required (config key 'seed' or --seed)", file=sys.stderr)
        return EXIT_USAGE
    if args.output_dir is not None:
        payload["output_dir"] = args.output_dir
    try:
        tmp_cfg = ExperimentConfig(**payload)
    except (TypeError, ValueError) as exc:
        print(f"study: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_scaling_study(tmp_cfg, workers=args.workers)
    print(
        f"study complete: {len(report.rows)} grid cells, "
        f"{len(report.failures)} failures -> {tmp_cfg.output_dir}"
    )
    return EXIT_DATA if report.failures and not report.rows else EXIT_OK


def _cmd_plateau(args) -> int:
    rows = read_metrics_csv(args.csv)
    groups: dict[tuple[str, int], list[tuple[float, float, str]]] = {}
    for row in rows:
        value = row[args.column]
        if value is None:
            continue
        groups.setdefault((row["algorithm"], row["vocab_size"]), []).append(
            (float(row["slice_bytes"]), value, row["slice_label"])
        )
    if not groups:
        raise TokscaleError(f"no usable rows for column {args.column}")
    for (alg, size), entries in sorted(groups.items()):
        entries.sort(key=lambda e: e[0])
        series = [(b, v) for b, v, _ in entries]
        idx = detect_plateau(series, args.threshold, args.window)
        label = entries[idx][2] if idx is not None else "none"
        print(f"{alg}\t{size}\t{label}")
    return EXIT_OK


_COMMANDS = {
    "pretok": _cmd_pretok,
    "train": _cmd_train,
    "encode": _cmd_encode,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "study": _cmd_study,
    "plateau": _cmd_plateau,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except TokscaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
