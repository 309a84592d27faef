"""Figures written next to a report: claim values against their bounds and
the capacity ascent trace."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STATUS_COLORS = {"pass": "#4c72b0", "fail": "#c44e52", "inconclusive": "#dd8452"}


def _setup(width=7.0, height=None):
    golden = (np.sqrt(5) - 1) / 2
    fig, ax = plt.subplots(figsize=(width, height or width * golden))
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    return fig, ax


def plot_claims(report, path) -> Path:
    claims = report.verdicts
    fig, ax = _setup()
    x = np.arange(len(claims))
    values = [c.value for c in claims]
    ax.bar(x, values, color=[STATUS_COLORS[c.status] for c in claims], width=0.6, label="value")
    ax.scatter(x, [c.bound for c in claims], marker="_", s=400, color="k", zorder=3, label="bound")
    ax.set_xticks(x)
    ax.set_xticklabels([c.id for c in claims], rotation=45, ha="right")
    ax.set_ylabel("bits")
    ax.set_title(f"{report.box_id} (seed {report.seed})")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_capacity_trace(result, path, target: float | None = None) -> Path:
    fig, ax = _setup()
    ax.plot(np.arange(len(result.history)), result.history, lw=1.5)
    if target is not None:
        ax.axhline(target, color="k", ls="--", lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("best objective (bits)")
    ax.set_title(f"{result.restarts} restarts, converged={result.converged}")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_report_figures(report, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [plot_claims(report, directory / f"{report.box_id}_claims.png")]
    if report.capacity is not None:
        target = next((c.bound for c in report.verdicts if c.id == "T4-cap"), None)
        paths.append(plot_capacity_trace(report.capacity, directory / f"{report.box_id}_capacity.png", target))
    return paths
