"""Figures rendered from a results directory's CSV files (PNG, headless backend)."""

from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import DatasetIOError  # noqa: E402
from .experiment import variant_name  # noqa: E402

_METRICS_FILE = re.compile(r"^(?P<dataset>.+)_(?P<base>ht|hat)_(?P<mode>none|kde|hs|kde-hs)_metrics\.csv$")

SERIES = (
    ("win_rmse", "RMSE over the last 1,000 examples"),
    ("win_r2", "R$^2$ over the last 1,000 examples"),
    ("cum_rmse", "Cumulative RMSE"),
)


def read_columns(path) -> Dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetIOError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in body])
        except ValueError:
            cols[name] = np.array([r[j] for r in body])
    return cols


def _group_runs(results_dir: Path) -> Dict[str, list]:
    runs = {}
    for p in sorted(results_dir.glob("*_metrics.csv")):
        m = _METRICS_FILE.match(p.name)
        if m is None:
            continue
        label = variant_name(m["base"], m["mode"].replace("-", "+"))
        runs.setdefault(m["dataset"], []).append((label, p))
    return runs


def plot_metric_series(runs: list, column: str, title: str, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, p in runs:
        cols = read_columns(p)
        ax.plot(cols["seq"], cols[column], marker=".", linewidth=1, label=label)
    ax.set_xlabel("examples seen")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_bins(csv_path, path, title: str = "") -> None:
    """Bar chart of bin counts, with the smoothed weight on a second axis when present."""
    cols = read_columns(csv_path)
    centers = cols["bin_center"]
    width = np.min(np.diff(centers)) if len(centers) > 1 else 1.0
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(centers, cols["count"], width=width * 0.9, color="tab:blue", alpha=0.7)
    ax.set_xlabel("target")
    ax.set_ylabel("count")
    if "weight" in cols:
        ax2 = ax.twinx()
        ax2.plot(centers, cols["weight"], color="tab:red", linewidth=1.5)
        ax2.set_ylabel("smoothed density")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(results_dir) -> List[Path]:
    """Write one PNG per dataset and series next to the CSVs; returns the paths written."""
    results_dir = Path(results_dir)
    if not results_dir.is_dir():
        raise DatasetIOError(f"{results_dir} is not a directory")
    written = []
    for dataset, runs in _group_runs(results_dir).items():
        for column, title in SERIES:
            out = results_dir / f"{dataset}_{column}.png"
            plot_metric_series(runs, column, f"{dataset}: {title}", out)
            written.append(out)
    for p in sorted(results_dir.glob("*_bins.csv")):
        out = p.with_suffix(".png")
        plot_bins(p, out, p.stem)
        written.append(out)
    return written
