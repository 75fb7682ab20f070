"""A base tree plus optional KDE training weights, shared by shrinkage settings.

Shrinkage only changes how a path is read, so grid points that differ only
in ``lam`` share one ``TreeLearner`` and are served by ``predictions``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .drift import HoeffdingAdaptiveTreeRegressor
from .errors import ConfigError
from .htree import HoeffdingTreeRegressor, SplitConfig
from .relevance import DEFAULT_FLOOR, KDEWeighting
from .shrinkage import hs_predict

BASES = ("ht", "hat")


@dataclass(frozen=True)
class KDEParams:
    r: float
    h: float
    window: int


@dataclass(frozen=True)
class LearnerConfig:
    base: str = "ht"
    split: SplitConfig = field(default_factory=SplitConfig)
    n_regions: int = 10
    kernel: str = "gaussian"
    kde_distance: str = "raw"
    floor: float = DEFAULT_FLOOR
    freeze_after: Optional[int] = None
    adwin_delta: float = 0.002
    compare_window: int = 200

    def __post_init__(self):
        if self.base not in BASES:
            raise ConfigError(f"unknown base model {self.base!r}; expected one of {BASES}")


def make_tree(cfg: LearnerConfig):
    if cfg.base == "hat":
        return HoeffdingAdaptiveTreeRegressor(config=cfg.split, n_regions=cfg.n_regions,
                                              adwin_delta=cfg.adwin_delta,
                                              compare_window=cfg.compare_window)
    return HoeffdingTreeRegressor(config=cfg.split, n_regions=cfg.n_regions)


class TreeLearner:
    """Tree trained with (optionally) density-derived example weights."""

    def __init__(self, cfg: LearnerConfig, kde: Optional[KDEParams] = None):
        self.cfg = cfg
        self.kde = kde
        self.tree = make_tree(cfg)
        self.weighting = None
        if kde is not None:
            self.weighting = KDEWeighting(kde.r, kde.h, kde.window, cfg.kernel, cfg.kde_distance,
                                          cfg.floor, cfg.freeze_after)

    @property
    def is_cold(self) -> bool:
        return self.tree.is_cold

    def predict_one(self, x, lam: float = 0.0) -> float:
        if lam == 0 or self.tree.is_cold:
            return float(self.tree.predict_one(x))
        return float(hs_predict(self.tree.path_stats(x), lam))

    def predictions(self, x, lams: Sequence[float]) -> list:
        """Predictions for several shrinkage strengths from one path walk."""
        if self.tree.is_cold:
            return [0.0] * len(lams)
        path = self.tree.path_stats(x)
        return [float(path[-1][1]) if lam == 0 else float(hs_predict(path, lam)) for lam in lams]

    def learn_one(self, x, y: float) -> None:
        w = 1.0
        if self.weighting is not None:
            w = self.weighting.weight(y)
            self.weighting.observe(y)
        self.tree.learn_one(x, y, w)

    def adopt_kde(self, other: "TreeLearner") -> None:
        """Take over another learner's KDE settings and density state, keeping this tree."""
        self.kde = other.kde
        self.weighting = copy.deepcopy(other.weighting)
