"""Offline conversion of optimizer trace CSVs into convergence figures.

Consumes the experiment runner's trace schema
(k,f,grad_norm,stationarity,lyapunov,elapsed_ns) and renders per-method
mean curves over seeds with optional min-max or standard-deviation bands.
"""

from traceplot.figspec import FigureSpec, load_figure_spec
from traceplot.render import GroupStats, group_stats, read_trace, render

__all__ = [
    "FigureSpec",
    "load_figure_spec",
    "GroupStats",
    "group_stats",
    "read_trace",
    "render",
]
