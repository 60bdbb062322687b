"""Figure rendering for evidence projections and evaluation rates.

Every renderer writes a PNG next to the delimited output it visualizes
and returns the path it wrote. The backend is forced to Agg so the
package renders identically on headless machines.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import EmptyResults
from .evaluation import ProjectionRecord

_DPI = 150


def render_projection_figure(
    records: Sequence[ProjectionRecord],
    path: str | Path,
    title: str = "Evidence similarity by rank",
) -> Path:
    """Scatter each chunk's rank against its score, colored by heat."""
    if not records:
        raise EmptyResults("no projection records to plot")
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 5))
    xs = [r.x for r in records]
    ys = [r.y for r in records]
    heats = [r.heat for r in records]
    scatter = ax.scatter(xs, ys, c=heats, cmap="viridis", vmin=0.0, vmax=1.0, s=48)
    for record in records:
        ax.annotate(
            str(record.ordinal),
            (record.x, record.y),
            textcoords="offset points",
            xytext=(0, 6),
            fontsize=7,
            ha="center",
        )
    ax.set_xlabel("rank (best first)")
    ax.set_ylabel("cosine score")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.colorbar(scatter, ax=ax, label="heat")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_rates_figure(
    rates: Mapping[str, float],
    path: str | Path,
    title: str = "Evaluation rates",
) -> Path:
    """Bar chart of named rates on a [0, 1] axis."""
    if not rates:
        raise EmptyResults("no rates to plot")
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 5))
    names = list(rates)
    values = [rates[name] for name in names]
    bars = ax.bar(names, values, color="#3b6ea5")
    for bar, value in zip(bars, values):
        ax.annotate(
            f"{value * 100:.2f}%",
            (bar.get_x() + bar.get_width() / 2, value),
            textcoords="offset points",
            xytext=(0, 3),
            ha="center",
            fontsize=9,
        )
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("rate")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_accuracy_figure(
    per_scenario: Mapping[str, float],
    path: str | Path,
    title: str = "Report accuracy by scenario",
) -> Path:
    """Bar chart of per-scenario accuracy."""
    return render_rates_figure(per_scenario, path, title=title)
