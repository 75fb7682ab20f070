"""Hierarchical shrinkage applied to a root-to-leaf path at prediction time.

The plain tree prediction telescopes along the path,
``mean(t0) + sum_l (mean(t_l) - mean(t_{l-1}))``.  Shrinkage damps each
increment by ``1 + lam / N(t_{l-1})``; ``lam = 0`` recovers the leaf mean.
The tree itself is never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, EmptyStateError


@dataclass(frozen=True)
class ShrinkageConfig:
    lam: float = 0.0

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ConfigError(f"shrinkage strength must be finite and >= 0, got {self.lam}")


def hs_predict(path: Sequence[tuple], lam: float) -> float:
    """Shrunk prediction from ``[(N(t0), mean(t0)), ..., (N(tL), mean(tL))]``."""
    if not path:
        raise EmptyStateError("empty path")
    if not (lam >= 0 and math.isfinite(lam)):
        raise ConfigError(f"shrinkage strength must be finite and >= 0, got {lam}")
    if lam == 0:
        return path[-1][1]
    pred = path[0][1]
    for (n_parent, m_parent), (_, m_child) in zip(path, path[1:]):
        assert n_parent > 0, "internal node with zero count"
        pred += (m_child - m_parent) / (1.0 + lam / n_parent)
    return pred


def wrap_predict(tree, x, lam: float) -> float:
    """Shrunk prediction of ``tree`` for ``x``; identical to ``predict_one`` at lam = 0."""
    if tree.is_cold:
        return tree.predict_one(x)
    if lam == 0:
        return tree.predict_one(x)
    return hs_predict(tree.path_stats(x), lam)
