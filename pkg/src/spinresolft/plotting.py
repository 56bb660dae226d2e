"""Static SVG line plots with byte-stable output."""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


@dataclass
class PlotSpec:
    table: str
    x: str
    ys: list
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    logx: bool = False
    styles: list = field(default_factory=list)


def save_svg(path, spec: PlotSpec, columns: dict):
    """Render ``spec`` from ``columns`` to ``path``.

    A fixed hash salt and an empty date make repeated renders identical.
    """
    with plt.rc_context({"svg.hashsalt": "spinresolft", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        x = np.asarray(columns[spec.x], float)
        for i, name in enumerate(spec.ys):
            style = spec.styles[i] if i < len(spec.styles) else "-"
            ax.plot(x, np.asarray(columns[name], float), style, label=name, ms=3)
        if spec.logx:
            ax.set_xscale("log")
        ax.set_xlabel(spec.xlabel or spec.x)
        ax.set_ylabel(spec.ylabel)
        if spec.title:
            ax.set_title(spec.title)
        if len(spec.ys) > 1:
            ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
