"""Training weights derived from the smoothed label density.

Rare targets get large weights: each bin's weight is the inverse of its
smoothed density, rescaled so the bins that have actually been observed
average to one.  ``KDEWeighting`` wires this to a stream: targets go into a
tumbling window and the weights refresh only when the window fills.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .density import BinStructure, SmoothedDensity, process_window
from .errors import ConfigError, EmptyStateError
from .stream import TargetRange

DEFAULT_FLOOR = 1e-6


@dataclass(frozen=True)
class RelevanceMap:
    weights: np.ndarray
    observed: np.ndarray
    floor: float

    def __len__(self):
        return len(self.weights)


def weights_from_density(density: SmoothedDensity, floor: float = DEFAULT_FLOOR) -> RelevanceMap:
    if floor <= 0:
        raise ConfigError(f"floor must be > 0, got {floor}")
    if density.n == 0 or not np.any(density.weights > 0):
        raise EmptyStateError("cannot derive weights from an empty density")
    observed = density.counts > 0
    if not observed.any():
        # density fed through kde_update directly: treat every bin as observed
        observed = np.ones(len(density.weights), dtype=bool)
    raw = 1.0 / np.maximum(density.weights, floor)
    w = raw / raw[observed].mean()
    w.setflags(write=False)
    observed.setflags(write=False)
    return RelevanceMap(w, observed, floor)


def example_weight(rmap: Optional[RelevanceMap], bins: Optional[BinStructure], y: float) -> float:
    """Weight for target ``y``; 1.0 when no map exists yet or the bin is unseen."""
    if rmap is None or bins is None:
        return 1.0
    i = bins.lookup(y)
    if i is None or i >= len(rmap.weights):
        return 1.0
    return float(rmap.weights[i])


class KDEWeighting:
    """Tumbling-window incremental KDE producing per-example training weights.

    For ``r > 0`` the bin range comes from the targets seen so far until
    ``freeze_after`` targets have arrived; after that it is fixed and
    out-of-range targets are clamped.  Until the freeze, the raw targets are
    retained so the density can be replayed when the range moves.
    """

    def __init__(self, r: float, h: float, window: int, kernel: str = "gaussian",
                 distance: str = "raw", floor: float = DEFAULT_FLOOR,
                 freeze_after: Optional[int] = None):
        if window < 1:
            raise ConfigError(f"window size must be >= 1, got {window}")
        if r < 0 or h <= 0:
            raise ConfigError(f"need r >= 0 and h > 0, got r={r}, h={h}")
        self.r = float(r)
        self.h = float(h)
        self.window = int(window)
        self.kernel = kernel
        self.distance = distance
        self.floor = floor
        self.freeze_after = freeze_after
        self.range = TargetRange()
        self.frozen = False
        self.buffer = []
        self.history = []
        self._keep_history = self.r > 0
        self.density: Optional[SmoothedDensity] = None
        self.map: Optional[RelevanceMap] = None
        self.refreshes = 0
        if self.r == 0:
            self.density = SmoothedDensity(BinStructure(0.0), self.h, kernel, distance)

    @property
    def bins(self) -> Optional[BinStructure]:
        return None if self.density is None else self.density.bins

    def weight(self, y: float) -> float:
        return example_weight(self.map, self.bins, y)

    def observe(self, y: float) -> None:
        if not math.isfinite(y):
            raise ConfigError(f"non-finite target {y!r}")
        if self._keep_history:
            self.history.append(y)
        if not self.frozen:
            self.range.update(y)
            if self.freeze_after is not None and self.range.n >= self.freeze_after:
                self.frozen = True
        self.buffer.append(y)
        if len(self.buffer) >= self.window:
            self._flush()

    def _flush(self) -> None:
        window, self.buffer = self.buffer, []
        if self.r > 0:
            m, M = self.range.stats()
            fresh = BinStructure(self.r, m, M)
            if self.density is None or not self.density.bins.same_layout(fresh):
                # range moved: replay everything retained onto the new lattice
                self.density = SmoothedDensity(fresh, self.h, self.kernel, self.distance)
                replay = self.history if self.history else window
                process_window(self.density, replay)
            else:
                process_window(self.density, window)
            if self.frozen:
                self.history = []
                self._keep_history = False
        else:
            process_window(self.density, window)
        self.map = weights_from_density(self.density, self.floor)
        self.refreshes += 1
