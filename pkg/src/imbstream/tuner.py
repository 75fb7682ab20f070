"""Follow-the-Leader hyperparameter selection on alternating stream windows.

The stream is split into tuning and deployment phases.  During a tuning
phase every grid model predicts then trains on each example and adds its
absolute error to a per-phase total; at the end of the phase the deployed
model becomes the grid point with the lowest total (first in grid order on
ties).  During deployment only the deployed model sees the stream.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .errors import ConfigError
from .learner import KDEParams, LearnerConfig, TreeLearner

MODES = ("none", "kde", "hs", "kde+hs")
DEFAULT_GRIDS = {
    "r": (0.0, 0.1, 0.2, 0.5, 1.0),
    "lam": (0.0, 0.1, 1.0, 10.0, 15.0, 25.0),
    "h": (10.0, 50.0, 100.0),
    "window": (50, 100, 200),
}
MAX_TUNING_WINDOW = 3000
TUNING_PERIODS = 4


@dataclass(frozen=True)
class GridParams:
    r: Optional[float] = None
    lam: float = 0.0
    h: Optional[float] = None
    window: Optional[int] = None

    @property
    def kde(self) -> Optional[KDEParams]:
        if self.r is None:
            return None
        return KDEParams(self.r, self.h, self.window)


@dataclass
class GridPoint:
    params: GridParams
    model: object
    error: float = 0.0


def build_grid(mode: str, base: str = "ht", grids: Optional[dict] = None,
               cfg: Optional[LearnerConfig] = None) -> List[GridPoint]:
    """Grid points for an ablation ``mode``, ordered r, lam, h, window.

    Points that differ only in ``lam`` share one learner.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    grids = {**DEFAULT_GRIDS, **(grids or {})}
    cfg = cfg if cfg is not None else LearnerConfig(base=base)
    if cfg.base != base:
        cfg = LearnerConfig(**{**cfg.__dict__, "base": base})

    def need(name):
        vals = tuple(grids[name])
        if not vals:
            raise ConfigError(f"mode {mode!r} needs a non-empty {name} grid")
        return vals

    if mode == "none":
        combos = [GridParams()]
    elif mode == "hs":
        combos = [GridParams(lam=float(l)) for l in need("lam")]
    elif mode == "kde":
        combos = [GridParams(float(r), 0.0, float(h), int(w))
                  for r, h, w in itertools.product(need("r"), need("h"), need("window"))]
    else:
        combos = [GridParams(float(r), float(l), float(h), int(w))
                  for r, l, h, w in itertools.product(need("r"), need("lam"), need("h"), need("window"))]
    for p in combos:
        if p.lam < 0 or (p.r is not None and (p.r < 0 or p.h <= 0 or p.window < 1)):
            raise ConfigError(f"invalid grid point {p}")

    shared = {}
    points = []
    for p in combos:
        key = p.kde
        if key not in shared:
            shared[key] = TreeLearner(cfg, key)
        points.append(GridPoint(p, shared[key]))
    return points


def tuning_window_size(n: int) -> int:
    """min(floor(n / 8), 3000), at least 1."""
    return max(1, min(n // 8, MAX_TUNING_WINDOW))


def deploy_window_size(n: int, s_t: int, periods: int = TUNING_PERIODS) -> int:
    """Deployment length that spaces ``periods`` tuning windows evenly over the stream."""
    return max(1, (n - periods * s_t) // periods)


@dataclass(frozen=True)
class Phase:
    index: int
    kind: str
    start: int
    end: int

    def __len__(self):
        return self.end - self.start + 1


def schedule_phases(n: int, s_t: int, s_deploy: int, max_tuning: Optional[int] = None) -> List[Phase]:
    """Alternating tune/deploy phases covering examples 1..n.

    With ``max_tuning`` set, everything after that many tuning phases is one
    final deployment phase.
    """
    if s_t <= 0 or s_deploy <= 0:
        raise ConfigError(f"window sizes must be > 0, got {s_t}, {s_deploy}")
    phases = []
    pos = 1
    tuning = 0
    while pos <= n:
        if max_tuning is not None and tuning >= max_tuning:
            phases.append(Phase(len(phases), "deploy", pos, n))
            break
        kind = "tune" if len(phases) % 2 == 0 else "deploy"
        length = s_t if kind == "tune" else s_deploy
        end = min(pos + length - 1, n)
        phases.append(Phase(len(phases), kind, pos, end))
        tuning += kind == "tune"
        pos = end + 1
    return phases


@dataclass(frozen=True)
class TuningSchedule:
    s_t: int
    s_deploy: int
    phases: tuple

    @classmethod
    def derive(cls, n: int, s_t: Optional[int] = None, s_deploy: Optional[int] = None) -> "TuningSchedule":
        """Schedule for a stream of known length; unset sizes follow the four-period default."""
        derived = s_deploy is None
        s_t = tuning_window_size(n) if s_t is None else s_t
        s_deploy = deploy_window_size(n, s_t) if s_deploy is None else s_deploy
        phases = schedule_phases(n, s_t, s_deploy, TUNING_PERIODS if derived else None)
        return cls(s_t, s_deploy, tuple(phases))


@dataclass
class TuningRecord:
    phase: int
    params: GridParams
    error: float
    index: int


class FTLTuner:
    """Runs the grid and the deployed model over a stream.

    ``adopt="state"`` makes the deployed model *be* the winning grid model
    (it then keeps learning through deployment while the others wait);
    ``adopt="params"`` keeps a separate deployed tree that only takes over the
    winner's hyperparameters and density state.
    """

    def __init__(self, grid: Sequence[GridPoint], schedule: TuningSchedule, adopt: str = "state",
                 cfg: Optional[LearnerConfig] = None, record_errors: bool = False):
        if not grid:
            raise ConfigError("empty grid")
        if adopt not in ("state", "params"):
            raise ConfigError(f"unknown adoption mode {adopt!r}")
        self.grid = list(grid)
        self.schedule = schedule
        self.adopt = adopt
        self.deployed = 0
        self.i = 0
        self._phase_idx = 0
        self.log: List[TuningRecord] = []
        self.last_cold = False
        self.error_logs = [[] for _ in self.grid] if record_errors else None
        groups = {}
        for k, gp in enumerate(self.grid):
            groups.setdefault(id(gp.model), (gp.model, []))[1].append(k)
        self._groups = list(groups.values())
        self._own = None
        if adopt == "params":
            first = self.grid[0]
            self._own = TreeLearner(cfg if cfg is not None else getattr(first.model, "cfg"),
                                    first.params.kde)
            self._own_lam = first.params.lam

    @property
    def phase(self) -> Phase:
        return self.schedule.phases[self._phase_idx]

    @property
    def deployed_params(self) -> GridParams:
        return self.grid[self.deployed].params

    @property
    def deployed_learner(self) -> TreeLearner:
        return self._own if self._own is not None else self.grid[self.deployed].model

    def learners(self) -> list:
        """Every distinct learner the tuner trains, grid models first."""
        out = [model for model, _ in self._groups]
        if self._own is not None:
            out.append(self._own)
        return out

    def _deployed_predict(self, x) -> float:
        if self._own is not None:
            self.last_cold = self._own.is_cold
            return self._own.predict_one(x, self._own_lam)
        gp = self.grid[self.deployed]
        self.last_cold = gp.model.is_cold
        return gp.model.predictions(x, [gp.params.lam])[0]

    def step(self, x, y: float) -> float:
        """Prediction of the deployed model for ``x``, then learn from ``(x, y)``."""
        self.i += 1
        while self.i > self.phase.end:
            self._phase_idx += 1
        phase = self.phase
        if phase.kind == "tune":
            if self.i == phase.start:
                for gp in self.grid:
                    gp.error = 0.0
            preds = [0.0] * len(self.grid)
            for model, idxs in self._groups:
                for k, p in zip(idxs, model.predictions(x, [self.grid[k].params.lam for k in idxs])):
                    preds[k] = float(p)
            if self._own is not None:
                y_hat = self._deployed_predict(x)
            else:
                self.last_cold = self.grid[self.deployed].model.is_cold
                y_hat = preds[self.deployed]
            for k, gp in enumerate(self.grid):
                e = abs(preds[k] - y)
                gp.error += e
                if self.error_logs is not None:
                    self.error_logs[k].append(e)
            for model, _ in self._groups:
                model.learn_one(x, y)
            if self._own is not None:
                self._own.learn_one(x, y)
            if self.i == phase.end:
                self._select(phase)
            return y_hat
        y_hat = self._deployed_predict(x)
        if self._own is not None:
            self._own.learn_one(x, y)
        else:
            self.grid[self.deployed].model.learn_one(x, y)
        return y_hat

    def _select(self, phase: Phase) -> None:
        best = 0
        for k in range(1, len(self.grid)):
            if self.grid[k].error < self.grid[best].error:
                best = k
        self.deployed = best
        gp = self.grid[best]
        self.log.append(TuningRecord(phase.index, gp.params, gp.error, best))
        if self._own is not None:
            self._own.adopt_kde(gp.model)
            self._own_lam = gp.params.lam


def tuner_step(tuner: FTLTuner, example) -> tuple:
    y_hat = tuner.step(example.features, example.target)
    return y_hat, tuner


def write_tuning_log(log: Sequence[TuningRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "r", "lambda", "h", "window", "error"])
        for rec in log:
            p = rec.params
            w.writerow([rec.phase, "" if p.r is None else repr(p.r), repr(p.lam),
                        "" if p.h is None else repr(p.h), "" if p.window is None else p.window,
                        repr(float(rec.error))])
