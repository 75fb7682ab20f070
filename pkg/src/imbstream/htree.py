"""Incremental Hoeffding tree regressor with weighted statistics.

Leaves keep a weighted running mean/variance of the target and, per numeric
attribute, a small fixed grid of regions between the attribute's observed
minimum and maximum.  Region edges are the candidate cut points.  A leaf is
split when the variance-reduction merit of the best attribute beats the
runner-up by more than the Hoeffding bound (on the ratio scale, so R = 1),
or when the bound has shrunk below the tie threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ConfigError, InputError


def hoeffding_bound(R: float, delta: float, n: float) -> float:
    """sqrt(R^2 ln(1/delta) / (2n))."""
    if not R > 0:
        raise ConfigError(f"R must be > 0, got {R}")
    if not 0 < delta <= 1:
        raise ConfigError(f"delta must lie in (0, 1], got {delta}")
    if not n >= 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    return math.sqrt(R * R * math.log(1.0 / delta) / (2.0 * n))


MERIT_SCALES = ("variance", "best")


@dataclass(frozen=True)
class SplitConfig:
    """Split-test settings.

    ``merit_scale`` sets what the merit gap is divided by before it is compared
    with the bound: the leaf's target variance (the gap in fraction of variance
    explained) or the best merit (the relative gap).
    """

    delta: float = 1e-7
    R: float = 1.0
    grace_period: float = 200.0
    tau: float = 0.05
    merit_scale: str = "variance"

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.grace_period < 1:
            raise ConfigError(f"grace period must be >= 1, got {self.grace_period}")
        if self.tau < 0:
            raise ConfigError(f"tie threshold must be >= 0, got {self.tau}")
        if self.R <= 0:
            raise ConfigError(f"R must be > 0, got {self.R}")
        if self.merit_scale not in MERIT_SCALES:
            raise ConfigError(f"unknown merit scale {self.merit_scale!r}")


class RunningStats:
    """Weighted mean and sum of squared deviations (West's update)."""

    __slots__ = ("w", "mean", "m2")

    def __init__(self, w: float = 0.0, mean: float = 0.0, m2: float = 0.0):
        self.w = w
        self.mean = mean
        self.m2 = m2

    def add(self, y: float, w: float = 1.0) -> None:
        self.w += w
        d = y - self.mean
        self.mean += (w / self.w) * d
        self.m2 += w * d * (y - self.mean)

    @property
    def variance(self) -> float:
        return self.m2 / self.w if self.w > 0 else 0.0

    def copy(self) -> "RunningStats":
        return RunningStats(self.w, self.mean, self.m2)


class RegionObserver:
    """Per-attribute region statistics for one leaf.

    Each attribute's observed range is cut into ``n_regions`` equal regions;
    every region accumulates weight, weighted sum of x, and weighted sums of
    (shifted) y and y^2.  When a value falls outside the known range the range
    grows and existing regions are re-assigned by their mean x.
    """

    def __init__(self, n_features: int, n_regions: int = 10,
                 lo: Optional[np.ndarray] = None, hi: Optional[np.ndarray] = None):
        self.d = n_features
        self.k = n_regions
        self.lo = np.full(n_features, np.inf) if lo is None else np.array(lo, dtype=float)
        self.hi = np.full(n_features, -np.inf) if hi is None else np.array(hi, dtype=float)
        shape = (n_features, n_regions)
        self.w = np.zeros(shape)
        self.sx = np.zeros(shape)
        self.sy = np.zeros(shape)
        self.syy = np.zeros(shape)
        self.shift: Optional[float] = None
        self._rows = np.arange(n_features) * n_regions

    def _regions(self, x: np.ndarray) -> np.ndarray:
        width = self.hi - self.lo
        with np.errstate(divide="ignore", invalid="ignore"):
            pos = np.where(width > 0, (x - self.lo) / width * self.k, 0.0)
        return np.clip(pos.astype(np.int64), 0, self.k - 1)

    def _expand(self, j: int, v: float) -> None:
        lo, hi = min(self.lo[j], v), max(self.hi[j], v)
        w, sx, sy, syy = self.w[j].copy(), self.sx[j].copy(), self.sy[j].copy(), self.syy[j].copy()
        self.lo[j], self.hi[j] = lo, hi
        for a in (self.w, self.sx, self.sy, self.syy):
            a[j] = 0.0
        occupied = np.nonzero(w > 0)[0]
        if occupied.size == 0:
            return
        xm = sx[occupied] / w[occupied]
        width = hi - lo
        idx = np.zeros(occupied.size, dtype=np.int64) if width <= 0 else \
            np.clip(((xm - lo) / width * self.k).astype(np.int64), 0, self.k - 1)
        np.add.at(self.w[j], idx, w[occupied])
        np.add.at(self.sx[j], idx, sx[occupied])
        np.add.at(self.sy[j], idx, sy[occupied])
        np.add.at(self.syy[j], idx, syy[occupied])

    def update(self, x: np.ndarray, y: float, w: float) -> None:
        if self.shift is None:
            self.shift = y
        out = np.nonzero((x < self.lo) | (x > self.hi))[0]
        for j in out:
            self._expand(int(j), float(x[j]))
        flat = self._rows + self._regions(x)
        yc = y - self.shift
        self.w.flat[flat] += w
        self.sx.flat[flat] += w * x
        self.sy.flat[flat] += w * yc
        self.syy.flat[flat] += w * yc * yc

    def candidate_merits(self):
        """Best cut per attribute: (merits, region cut index, thresholds).

        Merit is the weighted variance reduction
        ``(S_L^2/W_L + S_R^2/W_R - S^2/W) / W``.
        """
        wl = np.cumsum(self.w, axis=1)[:, :-1]
        sl = np.cumsum(self.sy, axis=1)[:, :-1]
        wt = self.w.sum(axis=1, keepdims=True)
        st = self.sy.sum(axis=1, keepdims=True)
        wr = wt - wl
        sr = st - sl
        valid = (wl > 0) & (wr > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = np.where(valid, sl * sl / wl + sr * sr / wr - st * st / wt, -np.inf) / wt
        best_k = np.argmax(gain, axis=1)
        merits = gain[np.arange(self.d), best_k]
        merits = np.where(np.isfinite(merits), np.maximum(merits, 0.0), 0.0)
        width = self.hi - self.lo
        thresholds = self.lo + (best_k + 1) * width / self.k
        return merits, best_k, thresholds

    def target_variance(self) -> float:
        """Weighted variance of the targets this observer has seen."""
        w = self.w[0].sum()
        if w <= 0:
            return 0.0
        mean = self.sy[0].sum() / w
        return max(float(self.syy[0].sum() / w - mean * mean), 0.0)

    def side_stats(self, j: int, cut: int) -> tuple:
        """RunningStats of the examples left and right of region edge ``cut``."""
        out = []
        for sl in (slice(0, cut + 1), slice(cut + 1, None)):
            w = self.w[j, sl].sum()
            s = self.sy[j, sl].sum()
            ss = self.syy[j, sl].sum()
            if w > 0:
                mean_c = s / w
                out.append(RunningStats(w, mean_c + self.shift, max(ss - s * mean_c, 0.0)))
            else:
                out.append(RunningStats())
        return tuple(out)


class Node:
    __slots__ = ("id", "depth", "stats", "parent", "alternate", "adwin", "alt_state")

    def __init__(self, node_id: int, depth: int, stats: Optional[RunningStats] = None):
        self.id = node_id
        self.depth = depth
        self.stats = stats if stats is not None else RunningStats()
        self.parent: Optional["SplitNode"] = None
        self.alternate = None
        self.adwin = None
        self.alt_state = None

    is_leaf = False


class LeafNode(Node):
    __slots__ = ("observer", "last_attempt")

    def __init__(self, node_id, depth, n_features, n_regions, stats=None, lo=None, hi=None):
        super().__init__(node_id, depth, stats)
        self.observer = RegionObserver(n_features, n_regions, lo, hi)
        self.last_attempt = self.stats.w

    is_leaf = True

    @property
    def prediction(self) -> float:
        return self.stats.mean if self.stats.w > 0 else 0.0

    def learn(self, x, y, w):
        self.stats.add(y, w)
        self.observer.update(x, y, w)


class SplitNode(Node):
    """Internal node; ``stats`` are frozen at split time."""

    __slots__ = ("attr", "threshold", "left", "right", "lo", "hi")

    def __init__(self, node_id, depth, stats, attr, threshold, lo, hi):
        super().__init__(node_id, depth, stats)
        self.attr = attr
        self.threshold = threshold
        self.left: Optional[Node] = None
        self.right: Optional[Node] = None
        self.lo = lo
        self.hi = hi

    def child(self, x) -> Node:
        return self.left if x[self.attr] <= self.threshold else self.right

    def set_child(self, old: Node, new: Node) -> None:
        if self.left is old:
            self.left = new
        elif self.right is old:
            self.right = new
        else:
            raise ValueError("not a child of this node")
        new.parent = self


@dataclass(frozen=True)
class SplitDecision:
    split: bool
    attr: int = -1
    threshold: float = math.nan
    cut: int = -1
    best_merit: float = 0.0
    second_merit: float = 0.0
    epsilon: float = math.inf


def attempt_split(leaf: LeafNode, config: SplitConfig) -> SplitDecision:
    """Decide whether ``leaf`` should split and on what."""
    # statistics inherited from the parent at creation are not in the observer
    n = float(leaf.observer.w[0].sum()) if leaf.observer.d else 0.0
    if n <= 0 or leaf.stats.m2 <= 0:
        return SplitDecision(False)
    merits, cuts, thresholds = leaf.observer.candidate_merits()
    order = np.argsort(-merits, kind="stable")
    best = int(order[0])
    best_merit = float(merits[best])
    # a lone attribute competes against the null split
    second_merit = float(merits[order[1]]) if len(order) > 1 else 0.0
    if best_merit <= 0:
        return SplitDecision(False, best_merit=best_merit, second_merit=second_merit)
    eps = hoeffding_bound(config.R, config.delta, max(n, 1.0))
    scale = best_merit if config.merit_scale == "best" else leaf.observer.target_variance()
    if not scale > 0:
        return SplitDecision(False, best_merit=best_merit, second_merit=second_merit, epsilon=eps)
    gap = (best_merit - second_merit) / scale
    if gap > eps or eps < config.tau:
        return SplitDecision(True, best, float(thresholds[best]), int(cuts[best]),
                             best_merit, second_merit, eps)
    return SplitDecision(False, best_merit=best_merit, second_merit=second_merit, epsilon=eps)


class HoeffdingTreeRegressor:
    """Hoeffding tree for regression with per-example weights.

    Parameters
    ----------
    n_features : int, optional
        Inferred from the first example when omitted.
    config : SplitConfig
        Hoeffding confidence, tie threshold and grace period (in weight units).
    n_regions : int
        Number of equal-width regions per attribute; region edges are the
        candidate thresholds.
    """

    def __init__(self, n_features: Optional[int] = None, config: Optional[SplitConfig] = None,
                 n_regions: int = 10):
        if n_regions < 2:
            raise ConfigError("need at least 2 regions per attribute")
        self.config = config if config is not None else SplitConfig()
        self.n_regions = n_regions
        self.n_features = n_features
        self.n_seen = 0
        self._next_id = 0
        self.root: Optional[Node] = None
        if n_features is not None:
            self.root = self._new_leaf(0)

    def _new_leaf(self, depth, stats=None, lo=None, hi=None) -> LeafNode:
        leaf = LeafNode(self._next_id, depth, self.n_features, self.n_regions, stats, lo, hi)
        self._next_id += 1
        return leaf

    @property
    def is_cold(self) -> bool:
        return self.n_seen == 0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.n_features is None:
            self.n_features = x.shape[0]
            self.root = self._new_leaf(0)
        if x.shape != (self.n_features,):
            raise InputError(f"expected {self.n_features} features, got shape {x.shape}")
        return x

    @staticmethod
    def _sort(node: Node, x) -> Node:
        while not node.is_leaf:
            node = node.child(x)
        return node

    def learn_one(self, x, y: float, w: float = 1.0) -> "HoeffdingTreeRegressor":
        if not w > 0:
            raise InputError(f"weight must be > 0, got {w}")
        x = self._check(x)
        if not np.all(np.isfinite(x)) or not math.isfinite(y):
            raise InputError("non-finite feature or target")
        self.n_seen += 1
        leaf = self._sort(self.root, x)
        self._learn_leaf(leaf, x, y, w)
        return self

    def _learn_leaf(self, leaf: LeafNode, x, y, w) -> None:
        leaf.learn(x, y, w)
        if leaf.stats.w - leaf.last_attempt >= self.config.grace_period:
            leaf.last_attempt = leaf.stats.w
            decision = attempt_split(leaf, self.config)
            if decision.split:
                self._apply_split(leaf, decision)

    def _apply_split(self, leaf: LeafNode, d: SplitDecision) -> SplitNode:
        obs = leaf.observer
        node = SplitNode(leaf.id, leaf.depth, leaf.stats, d.attr, d.threshold,
                         obs.lo.copy(), obs.hi.copy())
        left_stats, right_stats = obs.side_stats(d.attr, d.cut)
        lhi = obs.hi.copy()
        lhi[d.attr] = d.threshold
        rlo = obs.lo.copy()
        rlo[d.attr] = d.threshold
        node.left = self._new_leaf(leaf.depth + 1, left_stats, obs.lo.copy(), lhi)
        node.right = self._new_leaf(leaf.depth + 1, right_stats, rlo, obs.hi.copy())
        node.left.parent = node
        node.right.parent = node
        node.adwin, node.alternate, node.alt_state = leaf.adwin, leaf.alternate, leaf.alt_state
        self._replace(leaf, node)
        return node

    def _replace(self, old: Node, new: Node) -> None:
        if old.parent is not None:
            old.parent.set_child(old, new)
        elif old is self.root:
            self.root = new
            new.parent = None
        else:
            self._replace_detached(old, new)

    def _replace_detached(self, old: Node, new: Node) -> None:
        raise ValueError("node is not attached to this tree")

    def predict_one(self, x) -> float:
        """Mean target of the leaf ``x`` reaches; 0.0 before any training."""
        if self.root is None or self.n_seen == 0:
            return 0.0
        return self._sort(self.root, np.asarray(x, dtype=float)).prediction

    def path(self, x) -> List[Node]:
        node = self.root
        out = [node]
        while not node.is_leaf:
            node = node.child(x)
            out.append(node)
        return out

    def path_stats(self, x) -> list:
        """(N(t), mean) from the root to the leaf reached by ``x``."""
        return [(n.stats.w, n.stats.mean) for n in self.path(np.asarray(x, dtype=float))]

    def nodes(self) -> List[Node]:
        if self.root is None:
            return []
        out, stack = [], [self.root]
        while stack:
            n = stack.pop()
            out.append(n)
            if not n.is_leaf:
                stack.extend((n.right, n.left))
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.nodes())

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes() if n.is_leaf)

    @property
    def height(self) -> int:
        return max((n.depth for n in self.nodes()), default=0)

    def dump(self, feature_names: Optional[list] = None) -> str:
        """Indented text view: id, depth, N(t), mean, and the split test."""
        if self.root is None:
            return "(empty tree)\n"
        lines = []

        def name(j):
            return feature_names[j] if feature_names else f"x[{j}]"

        def walk(n: Node, prefix: str):
            head = f"{prefix}node {n.id} depth={n.depth} N={n.stats.w:.6g} mean={n.stats.mean:.6g}"
            if n.is_leaf:
                lines.append(head + " leaf")
            else:
                lines.append(head + f" split {name(n.attr)} <= {n.threshold:.6g}")
                walk(n.left, prefix + "  ")
                walk(n.right, prefix + "  ")

        walk(self.root, "")
        return "\n".join(lines) + "\n"
