"""SVG line plots rendered with matplotlib.

Output is reproducible: no timestamp metadata and a fixed SVG id salt.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "svg.hashsalt": "pixsim",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "figure.figsize": (6.4, 4.0),
}


def line_plot(path, series, xlabel: str, ylabel: str, title: str = "",
              logx: bool = False, vlines=()):
    """Write ``series`` (list of (label, x, y)) to ``path`` as SVG."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, (label, x, y) in enumerate(series):
            ax.plot(x, y, label=label, gid=f"trace{k}")
        if logx:
            ax.set_xscale("log")
        for x in vlines:
            ax.axvline(x, color="0.4", linestyle="--", linewidth=0.8)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
