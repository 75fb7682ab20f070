import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imbstream.errors import ConfigError, InputError
from imbstream.htree import (HoeffdingTreeRegressor, LeafNode, RunningStats, SplitConfig,
                             SplitNode, attempt_split, hoeffding_bound)

# sqrt(ln(20) / 2) to 30 digits (mpmath)
BOUND_R1_D005_N1 = 1.22387341534040827318801348243


class TestHoeffdingBound:
    def test_examples(self):
        assert hoeffding_bound(1.0, 1.0, 17) == 0.0
        assert hoeffding_bound(1.0, 0.05, 1) == pytest.approx(BOUND_R1_D005_N1, rel=1e-15)
        assert hoeffding_bound(2.0, 0.1, 50) / hoeffding_bound(2.0, 0.1, 100) == pytest.approx(math.sqrt(2))

    @given(st.floats(0.01, 100), st.floats(1e-12, 0.99), st.integers(1, 10**7))
    def test_decreasing_in_n_and_delta(self, R, delta, n):
        eps = hoeffding_bound(R, delta, n)
        assert hoeffding_bound(R, delta, n + 1) < eps
        assert hoeffding_bound(R, min(1.0, delta * 1.5), n) < eps

    @pytest.mark.parametrize("args", [(0, 0.1, 1), (1, 0, 1), (1, 1.5, 1), (1, 0.1, 0)])
    def test_rejects_bad_arguments(self, args):
        with pytest.raises(ConfigError):
            hoeffding_bound(*args)


class TestRunningStats:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        ys, ws = rng.normal(3, 2, 10_000), rng.uniform(0.01, 5, 10_000)
        s = RunningStats()
        for y, w in zip(ys, ws):
            s.add(y, w)
        mean = np.sum(ws * ys) / np.sum(ws)
        assert s.w == pytest.approx(ws.sum(), rel=1e-12)
        assert s.mean == pytest.approx(mean, rel=1e-9)
        assert s.variance == pytest.approx(np.sum(ws * (ys - mean) ** 2) / ws.sum(), rel=1e-9)

    @given(st.lists(st.tuples(st.floats(-100, 100), st.integers(1, 6)), min_size=1, max_size=40))
    def test_integer_weight_equals_repeats(self, seq):
        a, b = RunningStats(), RunningStats()
        for y, k in seq:
            a.add(y, float(k))
            for _ in range(k):
                b.add(y)
        assert a.w == b.w
        assert a.mean == pytest.approx(b.mean, rel=1e-12, abs=1e-12)
        assert a.m2 == pytest.approx(b.m2, rel=1e-12, abs=1e-9)


class TestLearning:
    def test_first_example(self):
        t = HoeffdingTreeRegressor()
        assert t.is_cold and t.predict_one([0.0, 1.0]) == 0.0
        t.learn_one([0.0, 1.0], 3.0)
        assert t.predict_one([5.0, -2.0]) == 3.0

    def test_weighted_mean_scale_invariance(self):
        a, b = HoeffdingTreeRegressor(), HoeffdingTreeRegressor()
        a.learn_one([0.0], 1.0).learn_one([1.0], 3.0)
        b.learn_one([0.0], 1.0, 2.0).learn_one([1.0], 3.0, 2.0)
        assert a.predict_one([0.5]) == b.predict_one([0.5]) == 2.0

    def test_mean_of_two(self):
        t = HoeffdingTreeRegressor().learn_one([1.0], 4.0).learn_one([2.0], 6.0)
        assert t.predict_one([100.0]) == 5.0

    def test_input_checks(self):
        t = HoeffdingTreeRegressor().learn_one([1.0, 2.0], 0.0)
        with pytest.raises(InputError):
            t.learn_one([1.0], 0.0)
        with pytest.raises(InputError):
            t.learn_one([1.0, 2.0], 0.0, w=0.0)
        with pytest.raises(InputError):
            t.learn_one([1.0, math.nan], 0.0)

    def test_informative_feature_is_chosen(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(0, 1, (10_000, 4))
        y = np.where(X[:, 0] > 0.5, 10.0, 0.0)
        t = HoeffdingTreeRegressor()
        for x, v in zip(X, y):
            t.learn_one(x, v)
        # brute-force variance reduction of the best threshold per attribute
        def best_reduction(col):
            order = np.argsort(col)
            ys = y[order]
            n = len(ys)
            c1, c2 = np.cumsum(ys), np.cumsum(ys ** 2)
            k = np.arange(1, n)
            left = c2[:-1] - c1[:-1] ** 2 / k
            right = (c2[-1] - c2[:-1]) - (c1[-1] - c1[:-1]) ** 2 / (n - k)
            return (c2[-1] - c1[-1] ** 2 / n - (left + right).min()) / n
        reductions = [best_reduction(X[:, j]) for j in range(4)]
        assert int(np.argmax(reductions)) == 0
        assert not t.root.is_leaf and t.root.attr == 0
        assert t.predict_one([0.9, 0.5, 0.5, 0.5]) == pytest.approx(10.0)
        assert t.predict_one([0.1, 0.5, 0.5, 0.5]) == pytest.approx(0.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_pure_noise_does_not_split(self, seed):
        rng = np.random.default_rng(seed)
        t = HoeffdingTreeRegressor()
        for x, v in zip(rng.normal(size=(500, 3)), rng.normal(size=500)):
            t.learn_one(x, v)
        assert t.root.is_leaf

    def test_node_count_never_decreases(self):
        rng = np.random.default_rng(5)
        t = HoeffdingTreeRegressor(config=SplitConfig(grace_period=50))
        counts = []
        for x in rng.uniform(-1, 1, (4000, 2)):
            t.learn_one(x, np.sin(3 * x[0]) + x[1])
            counts.append(t.n_nodes)
        assert counts == sorted(counts) and counts[-1] > 3

    def test_locality(self):
        rng = np.random.default_rng(2)
        t = HoeffdingTreeRegressor()
        for x in rng.uniform(0, 1, (3000, 1)):
            t.learn_one(x, 0.0 if x[0] < 0.5 else 5.0)
        left = t.predict_one([0.1])
        t.learn_one([0.99], 7.0)
        assert t.predict_one([0.1]) == left


class TestSplitRule:
    def _leaf(self, n_features, rows):
        leaf = LeafNode(0, 0, n_features, 10)
        for x, y in rows:
            leaf.learn(np.asarray(x, float), y, 1.0)
        return leaf

    def test_single_attribute_tie_splits(self):
        rows = [([v], float(v > 0.5)) for v in np.linspace(0, 1, 40)]
        leaf = self._leaf(1, rows)
        d = attempt_split(leaf, SplitConfig(tau=1.0))
        assert d.split and d.attr == 0 and d.best_merit > 0
        assert d.epsilon < 1.0

    def test_no_split_without_variance(self):
        leaf = self._leaf(2, [([v, -v], 1.0) for v in np.linspace(0, 1, 30)])
        assert not attempt_split(leaf, SplitConfig(tau=1.0)).split

    def test_gap_against_bound(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(0, 1, (400, 2))
        ys = (X[:, 1] > 0.3).astype(float)
        d = attempt_split(self._leaf(2, list(zip(X, ys))), SplitConfig(delta=0.05, tau=0.0))
        gap = (d.best_merit - d.second_merit) / ys.var()
        assert d.epsilon == pytest.approx(hoeffding_bound(1.0, 0.05, 400))
        assert gap > d.epsilon and d.split and d.attr == 1

    def test_relative_gap_option(self):
        # the same noise leaf passes the relative test but not the variance-scaled one
        rng = np.random.default_rng(4)
        rows = list(zip(rng.normal(size=(400, 3)), rng.normal(size=400)))
        leaf = self._leaf(3, rows)
        rel = attempt_split(leaf, SplitConfig(merit_scale="best"))
        var = attempt_split(leaf, SplitConfig())
        assert (rel.best_merit - rel.second_merit) / rel.best_merit > rel.epsilon and rel.split
        assert not var.split
        with pytest.raises(ConfigError):
            SplitConfig(merit_scale="median")


def test_routing_on_hand_built_tree():
    t = HoeffdingTreeRegressor(n_features=2)
    root = t.root
    for x, y in (([0.0, 0.0], 1.0), ([1.0, 0.0], 3.0)):
        root.learn(np.asarray(x), y, 1.0)
    t.n_seen = 2
    split = SplitNode(root.id, 0, root.stats, 0, 0.5, np.zeros(2), np.ones(2))
    split.left = LeafNode(1, 1, 2, 10)
    split.right = LeafNode(2, 1, 2, 10)
    split.left.learn(np.zeros(2), 1.0, 1.0)
    split.right.learn(np.ones(2), 3.0, 1.0)
    split.left.parent = split.right.parent = split
    t.root = split
    assert t.predict_one([0.2, 9.0]) == 1.0
    assert t.predict_one([0.7, 9.0]) == 3.0
    assert t.path_stats([0.2, 0.0]) == [(2.0, 2.0), (1.0, 1.0)]
    text = t.dump(["a", "b"])
    assert "split a <= 0.5" in text and text.count("leaf") == 2
