"""Figure rendering for scaling-study CSV outputs.

The CSV files written by the study pipeline (metrics.csv and the
overlap-matrix CSVs) are the sole input contract; this package never
inspects any other artifact.
"""

__version__ = "0.1.0"

from .plots import METRICS_COLUMNS, PlotError, PlotSpec, build_figure, render

__all__ = ["METRICS_COLUMNS", "PlotError", "PlotSpec", "build_figure", "render"]
