"""ADWIN change detection and the Hoeffding Adaptive Tree regressor."""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, InputError
from .htree import HoeffdingTreeRegressor, LeafNode, Node, SplitConfig


class ADWIN:
    """Adaptive windowing over a stream of reals.

    The window is stored as an exponential histogram: row ``i`` holds up to
    ``max_buckets`` buckets that each summarise ``2**i`` values (sum and
    within-bucket squared deviation).  Every ``clock`` insertions all bucket
    boundaries are tested; when the two sides' means differ by more than
    the cut threshold, the oldest bucket is dropped and the test repeats.
    """

    def __init__(self, delta: float = 0.002, max_buckets: int = 5, clock: int = 32,
                 min_window: int = 5, grace: int = 10):
        if not 0 < delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {delta}")
        self.delta = delta
        self.max_buckets = max_buckets
        self.clock = clock
        self.min_window = min_window
        self.grace = grace
        self.rows = []  # rows[i]: deque of [total, variance], oldest on the left
        self.width = 0
        self.total = 0.0
        self.variance = 0.0
        self.n_updates = 0
        self.n_dropped = 0
        self.n_detections = 0
        self.last_cut_means = None  # (old mean, new mean) at the last detection

    @property
    def estimation(self) -> float:
        return self.total / self.width if self.width else 0.0

    def update(self, value: float) -> bool:
        """Insert ``value``; True when a change was detected."""
        value = float(value)
        if not math.isfinite(value):
            raise InputError(f"non-finite value {value!r}")
        self.n_updates += 1
        self._insert(value)
        if self.n_updates % self.clock == 0 and self.width > self.grace:
            return self._detect()
        return False

    def _insert(self, value: float) -> None:
        if self.width:
            mean = self.total / self.width
            self.variance += self.width * (value - mean) ** 2 / (self.width + 1)
        self.width += 1
        self.total += value
        if not self.rows:
            self.rows.append(deque())
        self.rows[0].append([value, 0.0])
        i = 0
        while len(self.rows[i]) > self.max_buckets:
            t1, v1 = self.rows[i].popleft()
            t2, v2 = self.rows[i].popleft()
            n = 2 ** i
            merged = [t1 + t2, v1 + v2 + n * n * (t1 / n - t2 / n) ** 2 / (2 * n)]
            if i + 1 == len(self.rows):
                self.rows.append(deque())
            self.rows[i + 1].append(merged)
            i += 1

    def _drop_oldest(self) -> None:
        i = len(self.rows) - 1
        t, v = self.rows[i].popleft()
        n = 2 ** i
        rest = self.width - n
        if rest > 0:
            u_rest = (self.total - t) / rest
            self.variance -= v + n * rest * (t / n - u_rest) ** 2 / (n + rest)
        else:
            self.variance = 0.0
        self.variance = max(self.variance, 0.0)
        self.width = rest
        self.total -= t
        self.n_dropped += n
        while self.rows and not self.rows[-1]:
            self.rows.pop()

    def _cut_threshold(self, n0: int, n1: int) -> float:
        v = self.variance / self.width
        dd = math.log(2.0 * math.log(self.width) / self.delta)
        m = 1.0 / (n0 - self.min_window + 1) + 1.0 / (n1 - self.min_window + 1)
        return math.sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m

    def _detect(self) -> bool:
        detected = False
        again = True
        while again and self.width > self.grace:
            again = False
            n0, u0 = 0, 0.0
            for i in range(len(self.rows) - 1, -1, -1):
                size = 2 ** i
                for t, _ in self.rows[i]:
                    n0 += size
                    u0 += t
                    n1 = self.width - n0
                    if n1 < self.min_window:
                        break
                    if n0 < self.min_window:
                        continue
                    u1 = self.total - u0
                    diff = abs(u0 / n0 - u1 / n1)
                    if diff > self._cut_threshold(n0, n1):
                        self.last_cut_means = (u0 / n0, u1 / n1)
                        self._drop_oldest()
                        detected = again = True
                        break
                if again or n1 < self.min_window:
                    break
        if detected:
            self.n_detections += 1
        return detected


def adwin_update(detector: ADWIN, value: float) -> tuple:
    flag = detector.update(value)
    return detector, flag


class _AltState:
    __slots__ = ("orig_err", "alt_err", "seen", "checks")

    def __init__(self, window: int):
        self.orig_err = deque(maxlen=window)
        self.alt_err = deque(maxlen=window)
        self.seen = 0
        self.checks = 0


class HoeffdingAdaptiveTreeRegressor(HoeffdingTreeRegressor):
    """Hoeffding tree whose nodes watch their error with ADWIN.

    Every node on an example's path feeds the squashed absolute error
    ``e / (1 + e)`` of the subtree prediction to its detector.  A detected
    increase starts an alternate subtree at that node, trained on the same
    examples.  Every ``compare_window`` examples the two are compared on
    their recent squashed errors: an alternate whose mean is lower by more
    than a Hoeffding-style margin (``swap_bound``) replaces the original; one
    that loses ``max_checks`` comparisons is discarded.
    """

    def __init__(self, n_features=None, config: Optional[SplitConfig] = None, n_regions: int = 10,
                 adwin_delta: float = 0.002, compare_window: int = 200, max_checks: int = 5,
                 swap_bound: bool = True,
                 on_event: Optional[Callable[[int, str], None]] = None):
        super().__init__(n_features, config, n_regions)
        self.adwin_delta = adwin_delta
        self.compare_window = compare_window
        self.max_checks = max_checks
        self.swap_bound = swap_bound
        self.on_event = on_event
        self.n_swaps = 0
        self.n_pruned = 0
        self.n_flags = 0

    def _event(self, node: Node, action: str) -> None:
        if self.on_event is not None:
            self.on_event(node.id, action)

    def learn_one(self, x, y: float, w: float = 1.0):
        if not w > 0:
            raise InputError(f"weight must be > 0, got {w}")
        x = self._check(x)
        if not np.all(np.isfinite(x)) or not math.isfinite(y):
            raise InputError("non-finite feature or target")
        self.n_seen += 1
        self._learn_subtree(self.root, x, y, w)
        return self

    def _learn_subtree(self, root: Node, x, y, w) -> None:
        path = [root]
        while not path[-1].is_leaf:
            path.append(path[-1].child(x))
        leaf = path[-1]
        err = abs(leaf.prediction - y)
        squashed = err / (1.0 + err)
        for node in path:
            if node.alternate is not None and self._feed_alternate(node, x, y, w, err):
                # node was replaced by its alternate, which already learned from x
                return
            if node.adwin is None:
                node.adwin = ADWIN(self.adwin_delta)
            if node.adwin.update(squashed):
                old, new = node.adwin.last_cut_means
                self.n_flags += 1
                self._event(node, "flag")
                if new > old and node.alternate is None:
                    node.alternate = self._new_alternate(node)
                    node.alt_state = _AltState(self.compare_window)
        self._learn_leaf(leaf, x, y, w)

    def _new_alternate(self, node: Node) -> LeafNode:
        alt = self._new_leaf(node.depth, None, node.lo.copy(), node.hi.copy()) if not node.is_leaf \
            else self._new_leaf(node.depth, None, node.observer.lo.copy(), node.observer.hi.copy())
        alt.parent = None
        return alt

    def _feed_alternate(self, node: Node, x, y, w, err: float) -> bool:
        st = node.alt_state
        alt_err = abs(self._sort(node.alternate, x).prediction - y)
        st.orig_err.append(err / (1.0 + err))
        st.alt_err.append(alt_err / (1.0 + alt_err))
        self._learn_subtree(node.alternate, x, y, w)
        st.seen += 1
        if st.seen % self.compare_window:
            return False
        st.checks += 1
        orig, alt_mean = float(np.mean(st.orig_err)), float(np.mean(st.alt_err))
        if alt_mean < orig - self._swap_margin(orig, len(st.orig_err)):
            alt = node.alternate
            node.alternate = None
            node.alt_state = None
            self._replace(node, alt)
            self.n_swaps += 1
            self._event(node, "swap")
            return True
        if st.checks >= self.max_checks:
            node.alternate = None
            node.alt_state = None
            self.n_pruned += 1
            self._event(node, "prune-alternate")
        return False

    def _swap_margin(self, p: float, n: int) -> float:
        if not self.swap_bound:
            return 0.0
        return math.sqrt(2.0 * p * (1.0 - p) * math.log(2.0 / self.adwin_delta) * 2.0 / n)

    def _replace_detached(self, old: Node, new: Node) -> None:
        # old is the root of some alternate subtree
        for owner in self.nodes_with_alternates():
            if owner.alternate is old:
                owner.alternate = new
                new.parent = None
                return
        raise ValueError("node is not attached to this tree")

    def nodes_with_alternates(self) -> list:
        out = []
        stack = [self.root] if self.root is not None else []
        while stack:
            n = stack.pop()
            if n.alternate is not None:
                out.append(n)
                stack.append(n.alternate)
            if not n.is_leaf:
                stack.extend((n.left, n.right))
        return out

    @property
    def n_alternates(self) -> int:
        return len(self.nodes_with_alternates())
