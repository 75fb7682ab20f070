import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imbstream.density import BinStructure, SmoothedDensity, process_window
from imbstream.errors import EmptyStateError
from imbstream.htree import HoeffdingTreeRegressor
from imbstream.learner import KDEParams, LearnerConfig, TreeLearner
from imbstream.relevance import KDEWeighting, example_weight, weights_from_density


def density_with(weights, counts=None):
    d = SmoothedDensity(BinStructure(1.0, 0.0, len(weights) - 1.0), 1.0)
    d.weights = np.asarray(weights, dtype=float)
    d.counts = np.ones(len(weights)) if counts is None else np.asarray(counts, dtype=float)
    d.n = int(d.counts.sum()) or 1
    return d


def test_uniform_density_gives_unit_weights():
    rmap = weights_from_density(density_with([0.25] * 4))
    np.testing.assert_array_equal(rmap.weights, np.ones(4))


def test_two_bin_example():
    rmap = weights_from_density(density_with([0.8, 0.2]), floor=1e-6)
    np.testing.assert_allclose(rmap.weights, [0.4, 1.6], rtol=1e-12)


def test_mean_one_over_observed_bins_only():
    rmap = weights_from_density(density_with([0.5, 0.1, 1e-9, 0.3], counts=[3, 1, 0, 2]))
    assert rmap.weights[rmap.observed].mean() == pytest.approx(1.0, abs=1e-9)
    assert np.all(rmap.weights > 0)


@given(st.lists(st.floats(1e-3, 10), min_size=2, max_size=12), st.randoms())
def test_permutation_and_monotonicity(ws, rnd):
    perm = list(range(len(ws)))
    rnd.shuffle(perm)
    a = weights_from_density(density_with(ws)).weights
    b = weights_from_density(density_with([ws[i] for i in perm])).weights
    np.testing.assert_allclose(b, a[perm], rtol=1e-12)
    order = np.argsort(ws)
    assert np.all(np.diff(a[order]) <= 1e-12 * a.max())


def test_empty_density():
    with pytest.raises(EmptyStateError):
        weights_from_density(SmoothedDensity(BinStructure(1.0, 0, 3), 1.0))


def test_example_weight_lookup():
    bins = BinStructure(0.0)
    d = SmoothedDensity(bins, 0.1)
    process_window(d, [1.0] * 9 + [2.0])
    rmap = weights_from_density(d)
    assert example_weight(rmap, bins, 2.0) > example_weight(rmap, bins, 1.0)
    assert example_weight(rmap, bins, 5.0) == 1.0  # unseen value
    assert example_weight(None, None, 5.0) == 1.0


class TestTumblingWindow:
    def test_map_refreshes_only_when_window_fills(self):
        kw = KDEWeighting(0.0, 0.1, window=3)
        for y in (1.0, 1.0):
            kw.observe(y)
        assert kw.map is None and kw.weight(1.0) == 1.0
        kw.observe(2.0)
        assert kw.refreshes == 1
        first = kw.weight(2.0)
        assert first > 1.0
        kw.observe(2.0)
        assert kw.weight(2.0) == first

    def test_positive_range_tracks_then_freezes(self):
        kw = KDEWeighting(0.5, 1.0, window=2, freeze_after=4)
        for y in (0.0, 1.0, 3.0, 2.0):
            kw.observe(y)
        assert kw.frozen and kw.bins.M == 3.0
        assert kw.density.n == 4  # replayed onto the widened lattice
        kw.observe(10.0)
        kw.observe(1.0)
        assert kw.bins.M == 3.0 and kw.bins.clamped == 1

    def test_neutral_weights_reproduce_unweighted_tree(self):
        # bins wider than the target range: one bin, so the density is uniform
        rng = np.random.default_rng(0)
        xs = rng.normal(size=(3000, 3))
        ys = np.where(xs[:, 0] > 0, 1.0, 2.0)
        cfg = LearnerConfig()
        weighted = TreeLearner(cfg, KDEParams(10.0, 5.0, 50))
        plain = HoeffdingTreeRegressor(config=cfg.split)
        for x, y in zip(xs, ys):
            weighted.learn_one(x, y)
            plain.learn_one(x, y)
        rm = weighted.weighting.map
        assert np.all(rm.weights == 1.0)
        assert plain.n_nodes > 1
        q = rng.normal(size=(500, 3))
        assert [weighted.predict_one(x) for x in q] == [plain.predict_one(x) for x in q]
