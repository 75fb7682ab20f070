"""Prequential MAE / RMSE / R^2, cumulative and over the trailing 1,000 examples."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyStateError

WINDOW = 1000
UNDEFINED = math.nan


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float
    r2: float


class PrequentialTracker:
    def __init__(self, window: int = WINDOW):
        self.window = window
        self.count = 0
        self.cold = 0
        self.sum_abs = 0.0
        self.sum_sq = 0.0
        # Welford state for the targets, used by R^2
        self.y_mean = 0.0
        self.y_m2 = 0.0
        self.recent = deque(maxlen=window)

    def record(self, y_pred: float, y: float, cold: bool = False) -> "PrequentialTracker":
        if not (math.isfinite(y_pred) and math.isfinite(y)):
            raise ValueError(f"non-finite pair ({y_pred!r}, {y!r})")
        e = y - y_pred
        self.count += 1
        self.cold += bool(cold)
        self.sum_abs += abs(e)
        self.sum_sq += e * e
        d = y - self.y_mean
        self.y_mean += d / self.count
        self.y_m2 += d * (y - self.y_mean)
        self.recent.append((y_pred, y))
        return self

    def cumulative(self) -> Metrics:
        if self.count == 0:
            raise EmptyStateError("no predictions recorded")
        r2 = 1.0 - self.sum_sq / self.y_m2 if self.y_m2 > 0 else UNDEFINED
        return Metrics(self.sum_abs / self.count, math.sqrt(self.sum_sq / self.count), r2)

    def windowed(self) -> Metrics:
        """Metrics over the last ``min(count, window)`` pairs; R^2 uses the window's own mean."""
        if self.count == 0:
            raise EmptyStateError("no predictions recorded")
        arr = np.asarray(self.recent)
        pred, y = arr[:, 0], arr[:, 1]
        e = y - pred
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        ss_res = float(np.sum(e * e))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else UNDEFINED
        return Metrics(float(np.mean(np.abs(e))), math.sqrt(ss_res / len(e)), r2)


def record(tracker: PrequentialTracker, y_pred: float, y: float) -> PrequentialTracker:
    return tracker.record(y_pred, y)


def windowed_metrics(tracker: PrequentialTracker) -> Metrics:
    return tracker.windowed()


METRIC_COLUMNS = ["seq", "cum_mae", "cum_rmse", "cum_r2", "win_mae", "win_rmse", "win_r2"]


class MetricsWriter:
    """Writes one metrics row every ``every`` records and once at the end."""

    def __init__(self, fh, every: int = WINDOW):
        self.writer = csv.writer(fh)
        self.writer.writerow(METRIC_COLUMNS)
        self.every = every
        self.last_seq = 0
        self.rows = []

    def maybe_emit(self, tracker: PrequentialTracker, force: bool = False) -> None:
        if tracker.count == 0 or tracker.count == self.last_seq:
            return
        if force or tracker.count % self.every == 0:
            c, w = tracker.cumulative(), tracker.windowed()
            row = [tracker.count, c.mae, c.rmse, c.r2, w.mae, w.rmse, w.r2]
            self.rows.append(row)
            self.writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
            self.last_seq = tracker.count
