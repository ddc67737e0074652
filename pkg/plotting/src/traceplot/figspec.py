"""Figure specification: which traces to plot and how."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import yaml

Y_COLUMNS = ("f", "grad_norm", "stationarity")
Y_SCALES = ("log", "linear")
BANDS = ("none", "min-max", "std")


class FigureSpecError(ValueError):
    """Invalid figure specification; the message names the offending field."""


@dataclasses.dataclass
class FigureSpec:
    """Groups of trace CSVs (label -> glob) plus axis and band choices."""

    groups: dict
    y: str = "f"
    yscale: str = "log"
    band: str = "min-max"
    output: str = "figure.png"
    title: str = ""
    base_dir: Path = Path(".")


def load_figure_spec(path) -> FigureSpec:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return parse_figure_spec(data, base_dir=path.parent)


def parse_figure_spec(data: dict, base_dir=Path(".")) -> FigureSpec:
    if not isinstance(data, dict):
        raise FigureSpecError("spec: top level must be a mapping")
    known = {"groups", "y", "yscale", "band", "output", "title"}
    for key in data:
        if key not in known:
            raise FigureSpecError(f"{key}: unknown key")
    groups = data.get("groups")
    if not isinstance(groups, dict) or not groups:
        raise FigureSpecError("groups: expected a non-empty mapping of label -> glob")
    for label, pattern in groups.items():
        if not isinstance(pattern, str) or not pattern:
            raise FigureSpecError(f"groups.{label}: expected a glob string")
    y = data.get("y", "f")
    if y not in Y_COLUMNS:
        raise FigureSpecError(f"y: expected one of {Y_COLUMNS}, got {y!r}")
    yscale = data.get("yscale", "log")
    if yscale not in Y_SCALES:
        raise FigureSpecError(f"yscale: expected one of {Y_SCALES}, got {yscale!r}")
    band = str(data.get("band", "min-max")).replace("±", "")
    if band not in BANDS:
        raise FigureSpecError(f"band: expected one of {BANDS}, got {data.get('band')!r}")
    output = data.get("output", "figure.png")
    if not isinstance(output, str) or not output:
        raise FigureSpecError("output: expected an image path")
    return FigureSpec(groups=dict(groups), y=y, yscale=yscale, band=band,
                      output=output, title=str(data.get("title", "")),
                      base_dir=Path(base_dir))
