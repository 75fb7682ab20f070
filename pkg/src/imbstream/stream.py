"""CSV ingestion and the labeled-example stream.

A stream is read row by row from a headered CSV file.  Rows can be dropped
by position, the target can be transformed, and rows with unparseable cells
are either skipped or imputed with the running column mean.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DatasetIOError, EmptyStateError

logger = logging.getLogger(__name__)

MISSING_MARKERS = frozenset({"", "?", "na", "nan", "null", "none"})
TARGET_TRANSFORMS = ("identity", "log1p")
MISSING_POLICIES = ("skip-row", "impute-mean")
ENCODINGS = ("epoch", "hour", "weekday")
SNIFF_ROWS = 200


@dataclass(frozen=True)
class LabeledExample:
    features: np.ndarray
    target: float
    seq: int


@dataclass(frozen=True)
class StreamSpec:
    path: str
    target: Union[str, int] = -1
    max_examples: Optional[int] = None
    drop_indices: tuple = ()
    target_transform: str = "identity"
    missing_policy: str = "skip-row"
    delimiter: str = ","
    # column name -> one of ENCODINGS; lets date/time columns become features
    encodings: dict = field(default_factory=dict)
    # explicit feature columns; default is every numeric non-target column
    feature_columns: Optional[tuple] = None

    def __post_init__(self):
        if self.max_examples is not None and self.max_examples <= 0:
            raise ConfigError(f"max_examples must be > 0, got {self.max_examples}")
        if len(set(self.drop_indices)) != len(self.drop_indices):
            raise ConfigError("drop_indices must be distinct")
        if self.target_transform not in TARGET_TRANSFORMS:
            raise ConfigError(f"unknown target transform {self.target_transform!r}")
        if self.missing_policy not in MISSING_POLICIES:
            raise ConfigError(f"unknown missing policy {self.missing_policy!r}")
        for col, enc in self.encodings.items():
            if enc not in ENCODINGS:
                raise ConfigError(f"unknown encoding {enc!r} for column {col!r}")


@dataclass
class StreamCounters:
    rows_read: int = 0
    dropped: int = 0
    skipped: int = 0
    imputed: int = 0
    yielded: int = 0


def _parse_float(cell: str) -> Optional[float]:
    cell = cell.strip()
    if cell.lower() in MISSING_MARKERS:
        return None
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_datetime(cell: str) -> Optional[datetime]:
    cell = cell.strip()
    try:
        return datetime.fromisoformat(cell)
    except ValueError:
        pass
    for fmt in ("%d/%m/%Y %H:%M:%S", "%d/%m/%Y", "%m/%d/%Y %H:%M", "%H:%M:%S"):
        try:
            return datetime.strptime(cell, fmt)
        except ValueError:
            continue
    return None


def _encode(cell: str, encoding: str) -> Optional[float]:
    dt = _parse_datetime(cell)
    if dt is None:
        return None
    if encoding == "epoch":
        return dt.timestamp()
    if encoding == "hour":
        return dt.hour + dt.minute / 60.0 + dt.second / 3600.0
    return float(dt.weekday())


def _resolve_target(header: Sequence[str], target: Union[str, int]) -> int:
    if isinstance(target, int) or (isinstance(target, str) and target.lstrip("-").isdigit()):
        idx = int(target)
        if idx < 0:
            idx += len(header)
        if not 0 <= idx < len(header):
            raise ConfigError(f"target column index {target} out of range for {len(header)} columns")
        return idx
    if target not in header:
        raise ConfigError(f"target column {target!r} not found in header {list(header)}")
    return header.index(target)


def _numeric_columns(rows: list, n_cols: int) -> list:
    """Columns where most non-missing sniffed cells parse as floats."""
    numeric = []
    for j in range(n_cols):
        ok = bad = 0
        for row in rows:
            if j >= len(row):
                continue
            cell = row[j].strip()
            if cell.lower() in MISSING_MARKERS:
                continue
            if _parse_float(cell) is None:
                bad += 1
            else:
                ok += 1
        if ok > 0 and ok >= bad:
            numeric.append(j)
    return numeric


def open_stream(spec: StreamSpec, counters: Optional[StreamCounters] = None) -> Iterator[LabeledExample]:
    """Yield the examples of ``spec.path`` in file order.

    Sequence numbers are assigned after dropping and skipping, so they always
    run 1, 2, 3, ...  Pass a ``StreamCounters`` to observe how many rows were
    dropped, skipped or imputed.
    """
    counters = counters if counters is not None else StreamCounters()
    try:
        fh = open(spec.path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetIOError(f"cannot read {spec.path}: {exc}") from exc

    with fh:
        reader = csv.reader(fh, delimiter=spec.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetIOError(f"{spec.path} is empty") from None
        t_idx = _resolve_target(header, spec.target)

        sniffed = []
        for row in reader:
            sniffed.append(row)
            if len(sniffed) >= SNIFF_ROWS:
                break

        enc_idx = {}
        for col, enc in spec.encodings.items():
            if col not in header:
                raise ConfigError(f"encoded column {col!r} not in header")
            enc_idx[header.index(col)] = enc
        if spec.feature_columns is not None:
            missing = [c for c in spec.feature_columns if c not in header]
            if missing:
                raise ConfigError(f"feature columns not in header: {missing}")
            feat_idx = [header.index(c) for c in spec.feature_columns]
        else:
            numeric = set(_numeric_columns(sniffed, len(header))) | set(enc_idx)
            feat_idx = [j for j in range(len(header)) if j != t_idx and j in numeric]
        if t_idx in feat_idx:
            raise ConfigError("target column cannot also be a feature")

        drops = set(spec.drop_indices)
        col_sum = np.zeros(len(feat_idx))
        col_cnt = np.zeros(len(feat_idx))

        def rows():
            yield from sniffed
            yield from reader

        seq = 0
        for pos, row in enumerate(rows()):
            counters.rows_read += 1
            if pos in drops:
                counters.dropped += 1
                continue
            if len(row) < len(header):
                counters.skipped += 1
                logger.warning("row %d: expected %d cells, got %d; skipped", pos, len(header), len(row))
                continue
            y = _parse_float(row[t_idx])
            if y is None:
                counters.skipped += 1
                logger.warning("row %d: non-numeric target %r; skipped", pos, row[t_idx])
                continue
            values = np.empty(len(feat_idx))
            bad = []
            for k, j in enumerate(feat_idx):
                v = _encode(row[j], enc_idx[j]) if j in enc_idx else _parse_float(row[j])
                if v is None:
                    bad.append(k)
                else:
                    values[k] = v
            if bad:
                if spec.missing_policy == "skip-row":
                    counters.skipped += 1
                    logger.warning("row %d: non-numeric cells in %s; skipped", pos,
                                   [header[feat_idx[k]] for k in bad])
                    continue
                for k in bad:
                    values[k] = col_sum[k] / col_cnt[k] if col_cnt[k] else 0.0
                counters.imputed += 1
            good = np.ones(len(feat_idx), dtype=bool)
            good[bad] = False
            col_sum[good] += values[good]
            col_cnt[good] += 1

            if spec.target_transform == "log1p":
                if y <= -1.0:
                    counters.skipped += 1
                    logger.warning("row %d: target %r outside log1p domain; skipped", pos, y)
                    continue
                y = math.log1p(y)

            seq += 1
            values.setflags(write=False)
            counters.yielded += 1
            yield LabeledExample(values, y, seq)
            if spec.max_examples is not None and seq >= spec.max_examples:
                return


def feature_names(spec: StreamSpec) -> list:
    """Names of the feature columns ``open_stream`` would produce, in order."""
    try:
        with open(spec.path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=spec.delimiter)
            header = [h.strip() for h in next(reader)]
            sniffed = [row for _, row in zip(range(SNIFF_ROWS), reader)]
    except (OSError, StopIteration) as exc:
        raise DatasetIOError(f"cannot read {spec.path}: {exc}") from exc
    t_idx = _resolve_target(header, spec.target)
    if spec.feature_columns is not None:
        return list(spec.feature_columns)
    numeric = set(_numeric_columns(sniffed, len(header))) | {header.index(c) for c in spec.encodings}
    return [header[j] for j in range(len(header)) if j != t_idx and j in numeric]


class TargetRange:
    """Running minimum and maximum of the targets seen so far."""

    def __init__(self):
        self.m = math.inf
        self.M = -math.inf
        self.n = 0

    def update(self, y: float) -> None:
        if y < self.m:
            self.m = y
        if y > self.M:
            self.M = y
        self.n += 1

    def stats(self) -> tuple:
        if self.n == 0:
            raise EmptyStateError("no targets observed yet")
        return self.m, self.M


def stream_stats(targets) -> tuple:
    """(min, max) of an iterable of targets or examples."""
    rng = TargetRange()
    for t in targets:
        rng.update(t.target if isinstance(t, LabeledExample) else float(t))
    return rng.stats()
