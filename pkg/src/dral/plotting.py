"""Learning-curve figures.

Figures are written as SVG. The plotted series are also stored verbatim as
JSON in the SVG ``<dc:description>`` element so they can be read back
without image processing (see :func:`read_embedded_series`).
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_learning_curves", "read_embedded_series", "STYLE"]

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "legend.fontsize": 8,
    "lines.linewidth": 1.5,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "dral",
    "svg.fonttype": "none",
}

_DC = "{http://purl.org/dc/elements/1.1/}"

METRIC_LABELS = {
    "E": r"$E_t$",
    "worst_var": r"$\max_{p}\ \mathbb{E}_p[\sigma_t^2]$",
}


def plot_learning_curves(series: dict, metric: str, path, title: str = "") -> Path:
    """One line per strategy with a shaded +-1 standard-error band, log-scaled y.

    ``series`` maps a label to ``{"t": [...], "mean": [...], "stderr": [...]}``.
    """
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for label, s in series.items():
            t = np.asarray(s["t"], dtype=float)
            m = np.asarray(s["mean"], dtype=float)
            e = np.asarray(s["stderr"], dtype=float)
            (line,) = ax.plot(t, np.where(m > 0, m, np.nan), label=label)
            lo = np.where(m - e > 0, m - e, np.nan)
            ax.fill_between(t, lo, m + e, color=line.get_color(), alpha=0.2, linewidth=0)
        ax.set_yscale("log")
        ax.set_xlabel("iteration $t$")
        ax.set_ylabel(METRIC_LABELS.get(metric, metric))
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        payload = json.dumps({"metric": metric, "series": series}, sort_keys=True)
        fig.savefig(path, format="svg", metadata={"Title": title or metric, "Description": payload, "Date": None})
        plt.close(fig)
    return path


def read_embedded_series(path) -> dict:
    """Return the ``{"metric": ..., "series": ...}`` block stored in an SVG."""
    root = ET.parse(path).getroot()
    node = root.find(f".//{_DC}description")
    if node is None or not node.text:
        raise ValueError(f"{path}: no embedded data block")
    return json.loads(node.text)
