"""SVG line plots of result tables.

matplotlib is imported on first use so the library stays importable without
a display.  The SVG hash salt is fixed and the date stripped, which makes
repeated runs write identical files.
"""
from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PlotSpec", "render_svg"]


@dataclass(frozen=True)
class PlotSpec:
    """How to draw a table: x column, y columns and axis scales."""

    x: str
    ys: tuple
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    logx: bool = False
    logy: bool = False


_STYLES = {"GP": ("C0", "-"), "GF": ("C3", "--"), "LP": ("C1", "-."), "LF": ("C2", ":")}


def _style(column):
    tag = column.rsplit("_", 1)[-1]
    return _STYLES.get(tag, (None, "-"))


def render_svg(table, plot, path):
    """Write ``table`` as an SVG line plot to ``path``."""
    import matplotlib
    from matplotlib.figure import Figure

    matplotlib.rcParams["svg.hashsalt"] = "qubitpair"
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    x = table.column(plot.x)
    for name in plot.ys:
        color, ls = _style(name)
        y = table.column(name)
        if plot.logy:
            y = abs(y)
        ax.plot(x, y, color=color, linestyle=ls, label=name)
    if plot.logx:
        ax.set_xscale("log")
    if plot.logy:
        ax.set_yscale("log")
    ax.set_xlabel(plot.xlabel or plot.x)
    ax.set_ylabel(plot.ylabel)
    if plot.title:
        ax.set_title(plot.title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path
