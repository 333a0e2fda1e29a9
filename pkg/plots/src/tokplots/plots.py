"""Plot construction from study CSVs.

Five figure kinds mirror the study's reporting needs: overlap-vs-data
curves, per-metric panels, Jaccard open/filled marker plots, coverage
curves and vocabulary-overlap heatmaps. Values are plotted exactly as
parsed; no smoothing, rescaling or reinterpretation happens here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.figure import Figure

# Column contract of metrics.csv, in file order.
METRICS_COLUMNS = [
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

KINDS = ("overlap_curve", "metric_panel", "jaccard_markers", "coverage_curve", "heatmap")

_MARKERS = {"bpe": "o", "unigram": "s", "wordpiece": "^"}
_COLORS = {"bpe": "tab:blue", "unigram": "tab:orange", "wordpiece": "tab:green"}

_DEFAULT_PANEL_METRICS = [
    "renyi_efficiency",
    "pretoken_cov_count",
    "freq_cov_20",
    "bytes_per_token",
]


class PlotError(Exception):
    """Raised for unknown kinds, malformed CSVs or empty selections."""


@dataclass
class PlotSpec:
    kind: str
    csv_path: str
    output_path: str
    algorithm: str | None = None
    vocab_size: int | None = None
    metrics: list[str] = field(default_factory=lambda: list(_DEFAULT_PANEL_METRICS))

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise PlotError(f"unknown plot kind {self.kind!r}; expected one of {KINDS}")


def read_metrics(path: str) -> list[dict]:
    """Typed rows from metrics.csv; missing columns are named."""
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.DictReader(fp)
        header = reader.fieldnames or []
        missing = [c for c in METRICS_COLUMNS if c not in header]
        if missing:
            raise PlotError(f"{path}: missing columns {missing}")
        rows = []
        for raw in reader:
            row: dict = {}
            for col in header:
                value = raw[col]
                if col in ("algorithm", "slice_label"):
                    row[col] = value
                elif col in ("vocab_size", "slice_bytes"):
                    row[col] = int(value)
                else:
                    row[col] = float(value) if value != "" else None
            rows.append(row)
    return rows


def read_matrix(path: str) -> tuple[list[str], list[list[float]]]:
    """(labels, matrix) from an overlap-matrix CSV."""
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.reader(fp)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"{path}: empty matrix file")
        if not header or header[0] != "slice":
            raise PlotError(f"{path}: missing columns ['slice']")
        labels = header[1:]
        matrix: list[list[float]] = []
        for line in reader:
            if line[0] != labels[len(matrix)]:
                raise PlotError(f"{path}: row order does not match header")
            matrix.append([float(v) for v in line[1:]])
    if len(matrix) != len(labels) or any(len(r) != len(labels) for r in matrix):
        raise PlotError(f"{path}: matrix is not square")
    return labels, matrix


def _select(rows: list[dict], spec: PlotSpec) -> list[dict]:
    out = [
        r
        for r in rows
        if (spec.algorithm is None or r["algorithm"] == spec.algorithm)
        and (spec.vocab_size is None or r["vocab_size"] == spec.vocab_size)
    ]
    if not out:
        raise PlotError(
            f"no rows match algorithm={spec.algorithm!r} vocab_size={spec.vocab_size!r}"
        )
    return sorted(out, key=lambda r: (r["algorithm"], r["vocab_size"], r["slice_bytes"]))


def _groups(rows: list[dict]):
    keys = sorted({(r["algorithm"], r["vocab_size"]) for r in rows})
    for alg, size in keys:
        yield alg, size, [r for r in rows if r["algorithm"] == alg and r["vocab_size"] == size]


def _series_style(alg: str) -> dict:
    return {"marker": _MARKERS.get(alg, "d"), "color": _COLORS.get(alg, "tab:gray")}


def _line_plot(ax, rows: list[dict], column: str, label: str, alg: str, **overrides):
    xs = [r["slice_bytes"] for r in rows]
    ys = [r[column] for r in rows]
    if any(y is None for y in ys):
        raise PlotError(f"column {column!r} has empty cells for {label!r}")
    style = _series_style(alg)
    style.update(overrides)
    ax.plot(xs, ys, label=label, **style)


def build_figure(spec: PlotSpec) -> Figure:
    """The figure for ``spec``, without writing it to disk."""
    if spec.kind == "heatmap":
        return _heatmap(spec)
    rows = _select(read_metrics(spec.csv_path), spec)
    if spec.kind == "overlap_curve":
        return _overlap_curve(spec, rows)
    if spec.kind == "metric_panel":
        return _metric_panel(spec, rows)
    if spec.kind == "jaccard_markers":
        return _jaccard_markers(spec, rows)
    return _coverage_curve(spec, rows)


def render(spec: PlotSpec) -> str:
    fig = build_figure(spec)
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)
    return spec.output_path


def _overlap_curve(spec: PlotSpec, rows: list[dict]) -> Figure:
    fig, ax = plt.subplots(figsize=(6, 4))
    for alg, size, group in _groups(rows):
        _line_plot(ax, group, "vocab_overlap", f"{alg} ({size})", alg)
    ax.set_xscale("log")
    ax.set_xlabel("slice_bytes")
    ax.set_ylabel("vocab_overlap")
    ax.set_title("Vocabulary overlap vs training data")
    ax.legend()
    fig.tight_layout()
    return fig


def _metric_panel(spec: PlotSpec, rows: list[dict]) -> Figure:
    metrics = spec.metrics
    bad = [m for m in metrics if m not in METRICS_COLUMNS]
    if bad:
        raise PlotError(f"missing columns {bad}")
    n = len(metrics)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(5 * ncols, 3.2 * nrows), squeeze=False)
    for k, metric in enumerate(metrics):
        ax = axes[k // ncols][k % ncols]
        for alg, size, group in _groups(rows):
            _line_plot(ax, group, metric, f"{alg} ({size})", alg)
        ax.set_xscale("log")
        ax.set_xlabel("slice_bytes")
        ax.set_ylabel(metric)
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    axes[0][0].legend()
    fig.tight_layout()
    return fig


def _jaccard_markers(spec: PlotSpec, rows: list[dict]) -> Figure:
    # Convention: plain Jaccard uses open markers, the weighted variant
    # filled markers of the same shape and color.
    fig, ax = plt.subplots(figsize=(6, 4))
    for alg, size, group in _groups(rows):
        _line_plot(
            ax, group, "jaccard_plain_avg", f"{alg} ({size})", alg,
            markerfacecolor="none", linestyle="--",
        )
        _line_plot(
            ax, group, "jaccard_weighted_avg", f"{alg} ({size}) WTD", alg,
            linestyle="-",
        )
    ax.set_xscale("log")
    ax.set_xlabel("slice_bytes")
    ax.set_ylabel("Jaccard index")
    ax.set_title("Jaccard (open) and weighted Jaccard (filled) vs reference")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _coverage_curve(spec: PlotSpec, rows: list[dict]) -> Figure:
    fig, ax = plt.subplots(figsize=(6, 4))
    for alg, size, group in _groups(rows):
        _line_plot(ax, group, "pretoken_cov_count", f"{alg} ({size}) count", alg)
        _line_plot(
            ax, group, "pretoken_cov_type", f"{alg} ({size}) type", alg,
            linestyle="--", markerfacecolor="none",
        )
    ax.set_xscale("log")
    ax.set_xlabel("slice_bytes")
    ax.set_ylabel("pre-token coverage")
    ax.set_title("Whole-pre-token coverage vs training data")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _heatmap(spec: PlotSpec) -> Figure:
    labels, matrix = read_matrix(spec.csv_path)
    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * len(labels), 0.8 + 0.9 * len(labels)))
    image = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels)
    for i in range(len(labels)):
        for j in range(len(labels)):
            ax.text(
                j, i, f"{matrix[i][j]:.2f}", ha="center", va="center",
                color="white" if matrix[i][j] < 0.6 else "black", fontsize=8,
            )
    ax.set_title("Shared vocabulary between slices")
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    return fig
