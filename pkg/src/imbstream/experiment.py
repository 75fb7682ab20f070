"""Running the tree variants over a dataset and writing the result tables.

One run streams a dataset through the tuner once, scoring every prediction
prequentially.  Its outputs share the prefix ``<dataset>_<base>_<mode>`` in
the output directory:

* ``_metrics.csv``: cumulative and trailing-window metrics every 1,000 examples
* ``_tuning.csv``: the winning grid point of each tuning phase
* ``_summary.csv``: one row (model, MAE, RMSE, R^2)
* ``_config.json``: the resolved run configuration
* ``_drift.csv`` / ``_density.csv``: drift events and the final density (verbose only)
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .density import dump_density_csv
from .errors import ConfigError, ImbStreamError, RunFailedError
from .learner import BASES, LearnerConfig
from .metrics import MetricsWriter, PrequentialTracker
from .stream import StreamSpec, open_stream
from .tuner import (DEFAULT_GRIDS, MODES, FTLTuner, TuningSchedule, build_grid,
                    write_tuning_log)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetPreset:
    filename: str
    target: str
    drop_indices: tuple = ()
    max_examples: Optional[int] = None
    delimiter: str = ","
    target_transform: str = "identity"


# Rows 3364, 9172, 13034, 16669 and 19006 hold the five largest AveOccup values.
CALIFORNIA_DROP = (3364, 9172, 13034, 16669, 19006)

DATASETS: Dict[str, DatasetPreset] = {
    "california": DatasetPreset("california_housing.csv", "MedHouseVal", CALIFORNIA_DROP),
    "epower": DatasetPreset("household_power_consumption.txt", "Global_active_power",
                            max_examples=100_000, delimiter=";"),
    "nytaxi": DatasetPreset("nytaxi.csv", "trip_duration", max_examples=20_000),
}

# Row order of the results table.
VARIANTS = (
    ("ht", "none"), ("hat", "none"),
    ("ht", "hs"), ("hat", "hs"),
    ("ht", "kde"), ("hat", "kde"),
    ("ht", "kde+hs"), ("hat", "kde+hs"),
)

SUMMARY_COLUMNS = ["dataset", "model", "mae", "rmse", "r2"]


def default_data_dir() -> Path:
    return Path(os.environ.get("IMBSTREAM_DATA", Path.cwd() / "data"))


def dataset_spec(name: str, data_dir=None, **overrides) -> StreamSpec:
    """StreamSpec for a named dataset; keyword overrides replace preset fields."""
    if name not in DATASETS:
        raise ConfigError(f"unknown dataset {name!r}; expected one of {sorted(DATASETS)}")
    p = DATASETS[name]
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    fields = dict(path=str(data_dir / p.filename), target=p.target, drop_indices=p.drop_indices,
                  max_examples=p.max_examples, delimiter=p.delimiter,
                  target_transform=p.target_transform)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return StreamSpec(**fields)


def variant_name(base: str, mode: str) -> str:
    parts = [base.upper()]
    if "kde" in mode:
        parts.append("KDE")
    if "hs" in mode:
        parts.append("HS")
    return " + ".join(parts)


@dataclass(frozen=True)
class RunConfig:
    stream: StreamSpec
    dataset: str = "custom"
    base: str = "ht"
    mode: str = "none"
    grids: dict = field(default_factory=dict)
    tune_window: Optional[int] = None
    deploy_window: Optional[int] = None
    adopt: str = "state"
    kde_distance: str = "raw"
    kernel: str = "gaussian"
    seed: int = 0
    out: str = "results"
    verbose: bool = False

    def __post_init__(self):
        if self.base not in BASES:
            raise ConfigError(f"unknown base model {self.base!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        unknown = set(self.grids) - set(DEFAULT_GRIDS)
        if unknown:
            raise ConfigError(f"unknown grid names {sorted(unknown)}")

    @property
    def prefix(self) -> str:
        return f"{self.dataset}_{self.base}_{self.mode.replace('+', '-')}"

    @property
    def model_name(self) -> str:
        return variant_name(self.base, self.mode)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["stream"]["drop_indices"] = list(self.stream.drop_indices)
        d["grids"] = {k: list(v) for k, v in self.grids.items()}
        return d


@dataclass
class RunResult:
    config: RunConfig
    n_examples: int
    mae: float
    rmse: float
    r2: float
    cold: int
    checkpoints: list
    tuning_log: list
    files: dict

    def summary_row(self) -> list:
        return [self.config.dataset, self.config.model_name, self.mae, self.rmse, self.r2]


def _fmt(v) -> str:
    return "nan" if isinstance(v, float) and math.isnan(v) else repr(float(v))


def run_experiment(cfg: RunConfig) -> RunResult:
    """Stream ``cfg.stream`` once through the tuner and write the run's files.

    Any files written before a failure are removed.
    """
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    files = {k: out / f"{cfg.prefix}_{k}.{ext}" for k, ext in
             (("metrics", "csv"), ("tuning", "csv"), ("summary", "csv"), ("config", "json"))}
    if cfg.verbose:
        if cfg.base == "hat":
            files["drift"] = out / f"{cfg.prefix}_drift.csv"
        if "kde" in cfg.mode:
            files["density"] = out / f"{cfg.prefix}_density.csv"
    try:
        return _run(cfg, files)
    except BaseException:
        for p in files.values():
            if p.exists():
                p.unlink()
        raise


def _run(cfg: RunConfig, files: dict) -> RunResult:
    examples = list(open_stream(cfg.stream))
    if not examples:
        raise ConfigError(f"{cfg.stream.path} produced no examples")
    n = len(examples)
    schedule = TuningSchedule.derive(n, cfg.tune_window, cfg.deploy_window)
    lcfg = LearnerConfig(base=cfg.base, kernel=cfg.kernel, kde_distance=cfg.kde_distance,
                         freeze_after=schedule.s_t)
    grid = build_grid(cfg.mode, cfg.base, cfg.grids, lcfg)
    tuner = FTLTuner(grid, schedule, adopt=cfg.adopt, cfg=lcfg)
    logger.info("%s: %d examples, %d grid points, s_t=%d, s_deploy=%d",
                cfg.prefix, n, len(grid), schedule.s_t, schedule.s_deploy)

    events = []
    if "drift" in files:
        for key, learner in enumerate(tuner.learners()):
            learner.tree.on_event = (lambda k: lambda node_id, action:
                                     events.append((tuner.i, k, node_id, action)))(key)

    tracker = PrequentialTracker()
    with open(files["metrics"], "w", newline="", encoding="utf-8") as fh:
        writer = MetricsWriter(fh)
        for ex in examples:
            y_hat = tuner.step(ex.features, ex.target)
            tracker.record(y_hat, ex.target, cold=tuner.last_cold)
            writer.maybe_emit(tracker)
        writer.maybe_emit(tracker, force=True)
    for rec in tuner.log:
        logger.info("phase %d winner %s error %.6g", rec.phase, rec.params, rec.error)

    write_tuning_log(tuner.log, files["tuning"])
    final = tracker.cumulative()
    result = RunResult(cfg, n, float(final.mae), float(final.rmse), float(final.r2), tracker.cold,
                       writer.rows, tuner.log, {k: str(v) for k, v in files.items()})
    write_summary([result.summary_row()], files["summary"])
    with open(files["config"], "w", encoding="utf-8") as fh:
        json.dump({**cfg.as_dict(), "n_examples": n, "s_t": schedule.s_t,
                   "s_deploy": schedule.s_deploy, "grid_points": len(grid)}, fh, indent=2)
        fh.write("\n")
    if "drift" in files:
        with open(files["drift"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["seq", "learner", "node_id", "action"])
            w.writerows(events)
    if "density" in files:
        deployed = tuner.deployed_learner
        if deployed.weighting is not None and deployed.weighting.density is not None:
            dump_density_csv(deployed.weighting.density, files["density"])
        else:
            files.pop("density")
            result.files.pop("density")
    logger.info("%s: MAE %.4f RMSE %.4f R2 %.4f", cfg.model_name, result.mae, result.rmse, result.r2)
    return result


def write_summary(rows: Sequence[list], path, flags: Optional[Sequence[list]] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = list(SUMMARY_COLUMNS)
        if flags is not None:
            header += ["rank_mae", "rank_rmse", "rank_r2"]
        w.writerow(header)
        for i, row in enumerate(rows):
            cells = list(row[:2]) + [_fmt(v) for v in row[2:5]]
            if flags is not None:
                cells += list(flags[i])
            w.writerow(cells)


def flag_best(rows: Sequence[list]) -> List[list]:
    """Per dataset and column: 1 for the best value, 2 for the second best, else 0.

    Lower is better for MAE and RMSE, higher for R^2; equal values share a rank.
    """
    flags = [[0, 0, 0] for _ in rows]
    by_dataset = {}
    for i, row in enumerate(rows):
        by_dataset.setdefault(row[0], []).append(i)
    for idx in by_dataset.values():
        for col, descending in ((2, False), (3, False), (4, True)):
            distinct = sorted({rows[i][col] for i in idx if not math.isnan(rows[i][col])},
                              reverse=descending)
            for rank, value in enumerate(distinct[:2], start=1):
                for i in idx:
                    if rows[i][col] == value:
                        flags[i][col - 2] = rank
    return flags


def _run_or_name(cfg: RunConfig) -> RunResult:
    try:
        return run_experiment(cfg)
    except ImbStreamError as exc:
        raise RunFailedError(f"run {cfg.prefix} failed: [{exc.kind}] {exc}") from exc
    except Exception as exc:
        raise RunFailedError(f"run {cfg.prefix} failed: {type(exc).__name__}: {exc}") from exc


def run_matrix(datasets: Sequence[str], template: RunConfig, data_dir=None,
               variants: Sequence[tuple] = VARIANTS, jobs: int = 1) -> List[RunResult]:
    """Run every variant on every dataset and write ``table.csv`` in ``template.out``.

    ``template`` supplies everything but the dataset, base model and mode.
    The first failing run aborts the matrix with a ``RunFailedError``.
    """
    if not datasets:
        logger.warning("empty dataset list: nothing to run")
        return []
    configs = []
    for name in datasets:
        spec = dataset_spec(name, data_dir)
        if not Path(spec.path).exists():
            raise RunFailedError(f"run {name} failed: [io] missing data file {spec.path}")
        for base, mode in variants:
            configs.append(replace(template, stream=spec, dataset=name, base=base, mode=mode))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_or_name, configs))
    else:
        results = [_run_or_name(c) for c in configs]
    rows = [r.summary_row() for r in results]
    write_summary(rows, Path(template.out) / "table.csv", flag_best(rows))
    return results
