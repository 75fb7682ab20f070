"""Kernels, target binning and kernel density estimates over the bins.

The batch estimate (``kde_batch``) averages scaled kernel bumps over a
multiset of targets.  Because that estimate is a running average it can be
maintained one target at a time: after the n-th target ``z``

    f_n(q) = f_{n-1}(q) + (K((q - z) / h) / h - f_{n-1}(q)) / n

which is what ``kde_update`` does for every bin's query point.
"""

from __future__ import annotations

import copy
import csv
import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, EmptyStateError

logger = logging.getLogger(__name__)

KERNELS = ("gaussian", "epanechnikov")
DISTANCES = ("raw", "bin")
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def kernel_eval(kind: str, u):
    """Evaluate kernel ``kind`` at ``u`` (scalar or array)."""
    u = np.asarray(u, dtype=float)
    if kind == "gaussian":
        out = _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    elif kind == "epanechnikov":
        out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    else:
        raise ConfigError(f"unknown kernel {kind!r}; expected one of {KERNELS}")
    return float(out) if out.ndim == 0 else out


class BinStructure:
    """Partition of the target range ``[m, M]`` into bins of width ``r``.

    With ``r > 0`` bin ``i`` is ``[m + i*r, m + (i+1)*r)`` and the last bin is
    closed at ``M``.  With ``r == 0`` every distinct target value gets its own
    bin, created the first time the value is seen.
    """

    def __init__(self, r: float, m: Optional[float] = None, M: Optional[float] = None):
        if r < 0 or not math.isfinite(r):
            raise ConfigError(f"bin range must be finite and >= 0, got {r}")
        self.r = float(r)
        self.clamped = 0
        if self.r > 0:
            if m is None or M is None:
                raise ConfigError("r > 0 needs both m and M")
            if M < m:
                raise ConfigError(f"M ({M}) < m ({m})")
            self.m, self.M = float(m), float(M)
            self.last = int(math.floor((self.M - self.m) / self.r))
            lo = self.m + self.r * np.arange(self.last + 1)
            hi = np.minimum(lo + self.r, self.M)
            hi[-1] = self.M
            self._centers = 0.5 * (lo + np.maximum(hi, lo))
        else:
            self.m = None if m is None else float(m)
            self.M = None if M is None else float(M)
            self._lookup = {}
            self._center_list = []

    @property
    def lazy(self) -> bool:
        return self.r == 0

    @property
    def n_bins(self) -> int:
        return len(self._center_list) if self.lazy else self.last + 1

    @property
    def centers(self) -> np.ndarray:
        if self.lazy:
            return np.asarray(self._center_list, dtype=float)
        return self._centers

    def lookup(self, y: float) -> Optional[int]:
        """Bin index of ``y`` without creating lazy bins; None if unseen."""
        if self.lazy:
            return self._lookup.get(float(y))
        return self._index(y, count=False)

    def index(self, y: float) -> int:
        """Bin index of ``y``; creates a new bin for an unseen value when r = 0."""
        if self.lazy:
            key = float(y)
            i = self._lookup.get(key)
            if i is None:
                i = len(self._center_list)
                self._lookup[key] = i
                self._center_list.append(key)
            return i
        return self._index(y, count=True)

    def _index(self, y: float, count: bool) -> int:
        if y < self.m or y > self.M:
            if count:
                self.clamped += 1
                logger.debug("target %r outside [%r, %r]; clamped", y, self.m, self.M)
            return 0 if y < self.m else self.last
        return min(int(math.floor((y - self.m) / self.r)), self.last)

    def same_layout(self, other: "BinStructure") -> bool:
        if self.lazy or other.lazy:
            return False
        return (self.r, self.m, self.M) == (other.r, other.m, other.M)


def bin_index(bins: BinStructure, y: float) -> int:
    return bins.index(y)


def kde_batch(targets: Iterable, kernel: str, h: float, q):
    """Batch KDE at query point(s) ``q`` over a multiset of ``(value, multiplicity)``."""
    if h <= 0:
        raise ConfigError(f"bandwidth must be > 0, got {h}")
    pairs = [(float(z), float(c)) for z, c in targets]
    total = sum(c for _, c in pairs)
    if not pairs or total <= 0:
        raise EmptyStateError("kde_batch over an empty multiset")
    z = np.array([p[0] for p in pairs])
    mult = np.array([p[1] for p in pairs])
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    k = kernel_eval(kernel, (q_arr[:, None] - z[None, :]) / h)
    est = (k @ mult) / (total * h)
    return float(est[0]) if np.ndim(q) == 0 else est


class SmoothedDensity:
    """Per-bin kernel density estimate maintained one target at a time.

    ``distance="bin"`` measures kernel distances in units of bins (only
    meaningful for ``r > 0``; lazy bins fall back to raw units).
    """

    def __init__(self, bins: BinStructure, h: float, kernel: str = "gaussian", distance: str = "raw"):
        if h <= 0 or not math.isfinite(h):
            raise ConfigError(f"bandwidth must be finite and > 0, got {h}")
        if kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {kernel!r}")
        if distance not in DISTANCES:
            raise ConfigError(f"unknown kde distance {distance!r}")
        self.bins = bins
        self.h = float(h)
        self.kernel = kernel
        self.distance = distance
        self.n = 0
        self.weights = np.zeros(bins.n_bins)
        self.counts = np.zeros(bins.n_bins)

    @property
    def scale(self) -> float:
        """Kernel argument denominator: h in label units or in bin units."""
        if self.distance == "bin" and not self.bins.lazy:
            return self.h * self.bins.r
        return self.h

    def _bump(self, q: np.ndarray, z: float) -> np.ndarray:
        return kernel_eval(self.kernel, (q - z) / self.scale) / self.h

    def _grow(self) -> None:
        """Add weights for lazily created bins, seeded from the multiplicities so far."""
        extra = self.bins.n_bins - len(self.weights)
        if extra <= 0:
            return
        new_q = self.bins.centers[len(self.weights):]
        if self.n > 0:
            seen = self.counts > 0
            pairs = zip(self.bins.centers[: len(self.counts)][seen], self.counts[seen])
            seeded = kde_batch(pairs, self.kernel, self.scale, new_q) * (self.scale / self.h)
        else:
            seeded = np.zeros(extra)
        self.weights = np.concatenate([self.weights, seeded])
        self.counts = np.concatenate([self.counts, np.zeros(extra)])

    def copy(self) -> "SmoothedDensity":
        return copy.deepcopy(self)

    def as_pairs(self) -> list:
        return list(zip(self.bins.centers.tolist(), self.weights.tolist()))


def kde_update(state: SmoothedDensity, z: float) -> SmoothedDensity:
    """Fold one more value ``z`` into every bin's estimate (in place)."""
    if not math.isfinite(z):
        raise ConfigError(f"non-finite value {z!r}")
    state._grow()
    state.n += 1
    q = state.bins.centers
    state.weights += (state._bump(q, z) - state.weights) / state.n
    return state


def process_window(state: SmoothedDensity, window: Sequence[float]) -> np.ndarray:
    """Bin each target of ``window`` and fold its bin center into the estimate."""
    if len(window) == 0:
        raise EmptyStateError("empty window")
    for y in window:
        i = state.bins.index(y)
        state._grow()
        kde_update(state, float(state.bins.centers[i]))
        state.counts[i] += 1
    return state.weights.copy()


def bin_frequencies(targets: Iterable[float], r: float) -> list:
    """(bin center, count) pairs for a histogram of ``targets`` with bins of width ``r``."""
    ys = np.asarray(list(targets), dtype=float)
    if ys.size == 0:
        raise EmptyStateError("no targets")
    bins = BinStructure(r, ys.min(), ys.max())
    counts = {}
    for y in ys:
        i = bins.index(y)
        counts[i] = counts.get(i, 0) + 1
    centers = bins.centers
    return [(float(centers[i]), counts.get(i, 0)) for i in range(bins.n_bins)]


def dump_density_csv(state: SmoothedDensity, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_center", "weight", "count"])
        for c, wt, n in zip(state.bins.centers, state.weights, state.counts):
            w.writerow([repr(float(c)), repr(float(wt)), int(n)])
