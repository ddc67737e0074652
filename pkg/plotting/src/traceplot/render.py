"""Trace parsing, per-group statistics, and figure rendering."""

from __future__ import annotations

import dataclasses
import glob as globmod
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from traceplot.figspec import FigureSpec

EXPECTED_HEADER = ["k", "f", "grad_norm", "stationarity", "lyapunov", "elapsed_ns"]


class TraceSchemaError(ValueError):
    """A trace file does not match the runner's CSV schema."""


def read_trace(path) -> dict:
    """Parse one trace CSV into column arrays, validating the schema."""
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines:
        raise TraceSchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    if header != EXPECTED_HEADER:
        for got, want in zip(header, EXPECTED_HEADER):
            if got != want:
                raise TraceSchemaError(f"{path}: expected column {want!r}, found {got!r}")
        raise TraceSchemaError(f"{path}: expected {len(EXPECTED_HEADER)} columns, found {len(header)}")
    columns = {name: [] for name in EXPECTED_HEADER}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != len(EXPECTED_HEADER):
            raise TraceSchemaError(f"{path}:{lineno}: expected {len(EXPECTED_HEADER)} fields")
        for name, field in zip(EXPECTED_HEADER, fields):
            columns[name].append(field)
    out = {"k": np.array([int(v) for v in columns["k"]])}
    for name in ("f", "grad_norm", "stationarity", "lyapunov"):
        out[name] = np.array([float(v) if v else np.nan for v in columns[name]])
    out["elapsed_ns"] = np.array([int(v) for v in columns["elapsed_ns"]])
    return out


@dataclasses.dataclass
class GroupStats:
    label: str
    files: list
    k: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray


def group_stats(label: str, files, column: str, band: str) -> GroupStats:
    """Mean curve over seeds plus the requested band edges."""
    if not files:
        raise TraceSchemaError(f"group {label!r}: no trace files matched")
    traces = [read_trace(f) for f in files]
    k = traces[0]["k"]
    for f, tr in zip(files, traces):
        if not np.array_equal(tr["k"], k):
            raise TraceSchemaError(f"{f}: iteration grid differs from {files[0]}")
    Y = np.stack([tr[column] for tr in traces])
    mean = Y.mean(axis=0)
    if band == "min-max":
        lo, hi = Y.min(axis=0), Y.max(axis=0)
    elif band == "std":
        std = Y.std(axis=0)
        lo, hi = mean - std, mean + std
    else:
        lo = hi = mean
    return GroupStats(label=label, files=list(files), k=k, mean=mean, lo=lo, hi=hi)


def resolve_groups(spec: FigureSpec) -> dict:
    """Expand each group's glob relative to the spec file's directory."""
    out = {}
    for label, pattern in spec.groups.items():
        pat = pattern if Path(pattern).is_absolute() else str(spec.base_dir / pattern)
        files = sorted(globmod.glob(pat))
        if not files:
            raise TraceSchemaError(f"group {label!r}: glob {pattern!r} matched no files")
        out[label] = files
    return out


def render(spec: FigureSpec) -> Path:
    """Render the figure described by `spec`; returns the output path."""
    groups = resolve_groups(spec)
    stats = [group_stats(label, files, spec.y, spec.band)
             for label, files in groups.items()]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for gs in stats:
        (line,) = ax.plot(gs.k, gs.mean, label=gs.label)
        if spec.band != "none" and len(gs.files) > 1:
            ax.fill_between(gs.k, gs.lo, gs.hi, alpha=0.2, color=line.get_color())
    ax.set_xlabel("iteration")
    ax.set_ylabel(spec.y)
    ax.set_yscale(spec.yscale)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()
    out = Path(spec.output)
    if not out.is_absolute():
        out = spec.base_dir / out
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return out
