"""Render sweep CSVs to figures.

Three figure kinds:

* ``noise-sweep``: exact risk vs novel-task noise, one line per config id,
  with Monte-Carlo error bars whenever the MC columns are filled.
* ``data-sweep``: the same layout with total data on the x axis.
* ``bounds-overlay``: exact risk solid, the bound columns dashed; series
  whose column is entirely empty are skipped with a console note.

Rendering is read-only over its inputs and never recomputes any number; the
same CSV and spec always produce the same set of plotted points.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .csvio import SweepTable, read_tables

KINDS = ("noise-sweep", "data-sweep", "bounds-overlay")

AXIS_LABELS = {
    "noise-sweep": ("novel-task noise variance", "risk"),
    "data-sweep": ("total data (M n + k)", "risk"),
    "bounds-overlay": ("sweep value", "risk and bounds"),
}

BOUND_COLUMNS = (
    ("upper_thm52", "upper bound"),
    ("upper_asymptotic", "large-n asymptote"),
    ("lower_thm51", "lower bound"),
)


@dataclass(frozen=True)
class PlotSpec:
    inputs: tuple[str, ...]
    kind: str
    out: str
    logx: bool = False
    logy: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("need at least one input CSV")


@dataclass
class RenderedSeries:
    """Points actually drawn, exposed so tests can assert on them."""

    label: str
    xs: list[float]
    ys: list[float]
    errors: list[float] | None = None
    style: str = "solid"


def _compact(xs, ys):
    pairs = [(x, y) for x, y in zip(xs, ys) if y is not None]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def _risk_series(table: SweepTable, config_id: str) -> list[RenderedSeries]:
    out = []
    xs, ys = _compact(*table.series(config_id, "risk_exact"))
    if xs:
        out.append(RenderedSeries(label=config_id, xs=xs, ys=ys))
    mc_x, mc_y = table.series(config_id, "risk_mc")
    _, mc_se = table.series(config_id, "risk_mc_se")
    points = [(x, y, e) for x, y, e in zip(mc_x, mc_y, mc_se) if y is not None]
    if points:
        out.append(
            RenderedSeries(
                label=f"{config_id} (MC)",
                xs=[p[0] for p in points],
                ys=[p[1] for p in points],
                errors=[p[2] if p[2] is not None else 0.0 for p in points],
                style="marker",
            )
        )
    return out


def _bound_series(table: SweepTable, config_id: str) -> list[RenderedSeries]:
    out = []
    for column, label in BOUND_COLUMNS:
        xs, ys = _compact(*table.series(config_id, column))
        if not xs:
            print(f"note: {config_id}: column {column} is empty, series omitted", file=sys.stderr)
            continue
        out.append(RenderedSeries(label=f"{config_id} {label}", xs=xs, ys=ys, style="dashed"))
    return out


def build_series(table: SweepTable, kind: str) -> list[RenderedSeries]:
    """All series a figure of this kind draws from the table."""
    series = []
    for config_id in table.config_ids:
        series.extend(_risk_series(table, config_id))
        if kind == "bounds-overlay":
            series.extend(_bound_series(table, config_id))
    return series


def render(spec: PlotSpec) -> list[RenderedSeries]:
    """Render the figure described by ``spec`` and return the drawn series."""
    table = read_tables(spec.inputs)
    series = build_series(table, spec.kind)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for entry in series:
        if entry.style == "marker":
            ax.errorbar(
                entry.xs, entry.ys, yerr=entry.errors,
                fmt="o", markersize=3.5, capsize=2.5, alpha=0.75,
                label=entry.label,
            )
        elif entry.style == "dashed":
            ax.plot(entry.xs, entry.ys, linestyle="--", linewidth=1.1, label=entry.label)
        else:
            ax.plot(entry.xs, entry.ys, linewidth=1.6, marker=".", label=entry.label)
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    xlabel, ylabel = AXIS_LABELS[spec.kind]
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)
    return series
