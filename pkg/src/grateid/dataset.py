"""Sampled plant records, standardization and experiment bookkeeping."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from ._rng import substream
from .errors import (
    InvalidCounts,
    LengthMismatch,
    MissingSamples,
    NoChangesDetected,
    NonFiniteInput,
    ValidationError,
    ZeroRange,
)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Channel:
    name: str
    values: np.ndarray
    sample_period: float
    unit: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 1:
            raise ValidationError(f"channel {self.name!r} must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteInput(f"channel {self.name!r} contains non-finite samples")
        if not self.sample_period > 0:
            raise ValidationError(f"channel {self.name!r}: sample_period must be positive")

    def __len__(self):
        return len(self.values)

    def with_values(self, values, name=None, unit=None) -> "Channel":
        return Channel(name or self.name, values, self.sample_period,
                       self.unit if unit is None else unit)


class Record:
    """A set of equally long, uniformly sampled channels.

    Channels are looked up by name; ``record["Q_SP"]`` returns the raw values.
    """

    def __init__(self, channels: Iterable[Channel], start_time: float = 0.0):
        chans = list(channels)
        if not chans:
            raise ValidationError("a record needs at least one channel")
        dt = chans[0].sample_period
        n = len(chans[0])
        for c in chans:
            if len(c) != n:
                raise LengthMismatch(f"channel {c.name!r} has {len(c)} samples, expected {n}")
            if not np.isclose(c.sample_period, dt, rtol=1e-12, atol=0):
                raise ValidationError(f"channel {c.name!r} has a different sample period")
        self.channels = {c.name: c for c in chans}
        self.sample_period = float(dt)
        self.start_time = float(start_time)

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, Sequence[float]], sample_period: float,
                    units: Mapping[str, str] | None = None, start_time: float = 0.0) -> "Record":
        units = units or {}
        return cls([Channel(k, v, sample_period, units.get(k, "")) for k, v in arrays.items()],
                   start_time)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name].values

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    def __len__(self):
        return len(next(iter(self.channels.values())))

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    @property
    def time(self) -> np.ndarray:
        return self.start_time + self.sample_period * np.arange(len(self))

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: c.values for k, c in self.channels.items()}

    def with_channels(self, extra: Iterable[Channel]) -> "Record":
        chans = dict(self.channels)
        for c in extra:
            chans[c.name] = c
        return Record(chans.values(), self.start_time)

    def select(self, names: Iterable[str]) -> "Record":
        return Record([self.channels[n] for n in names], self.start_time)


# ---------------------------------------------------------------------------
# CSV ingestion

def read_csv(path, column_map: Mapping[str, str] | None = None, time_column: str = "time",
             units: Mapping[str, str] | None = None) -> Record:
    """Load a record from CSV.

    The time column holds either integer/float seconds or ISO-8601 timestamps.
    ``column_map`` maps CSV column names to signal names; unmapped columns keep
    their header name. Records with gaps or irregular sampling are rejected.
    """
    df = pd.read_csv(path, float_precision="round_trip")
    if time_column not in df.columns:
        raise ValidationError(f"time column {time_column!r} not found in {path}")
    tcol = df[time_column]
    if pd.api.types.is_numeric_dtype(tcol):
        t = tcol.to_numpy(dtype=float)
    else:
        stamps = pd.to_datetime(tcol, utc=True)
        t = (stamps - stamps.iloc[0]).dt.total_seconds().to_numpy()
    if len(t) < 2:
        raise ValidationError("record must contain at least two samples")
    steps = np.diff(t)
    dt = float(np.median(steps))
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):
        raise MissingSamples("time column is not uniformly sampled (gaps are not imputed)")
    column_map = dict(column_map or {})
    arrays = {}
    for col in df.columns:
        if col == time_column:
            continue
        values = df[col].to_numpy(dtype=float)
        if np.isnan(values).any():
            raise MissingSamples(f"column {col!r} has missing samples")
        arrays[column_map.get(col, col)] = values
    start = float(t[0]) if pd.api.types.is_numeric_dtype(tcol) else 0.0
    return Record.from_arrays(arrays, dt, units, start)


def write_csv(record: Record, path, time_column: str = "time") -> None:
    df = pd.DataFrame({time_column: record.time, **record.as_dict()})
    df.to_csv(path, index=False, float_format="%.17g")


# ---------------------------------------------------------------------------
# Standardization

@dataclass(frozen=True)
class Standardizer:
    """Per-channel mean and range used for ``(x - mean) / range``."""

    mean: Mapping[str, float]
    range: Mapping[str, float]

    @classmethod
    def fit(cls, record: Record, windows: Sequence[tuple[int, int]] | None = None,
            names: Iterable[str] | None = None) -> "Standardizer":
        names = list(names) if names is not None else record.names
        means, ranges = {}, {}
        for n in names:
            x = record[n]
            if windows is not None:
                x = np.concatenate([x[a:b] for a, b in windows])
            r = float(np.max(x) - np.min(x))
            if r <= 0:
                raise ZeroRange(f"channel {n!r} is constant on the fitting data")
            means[n] = float(np.mean(x))
            ranges[n] = r
        return cls(means, ranges)

    def apply(self, record: Record) -> Record:
        return Record([standardize(record.channels[n], self) if n in self.mean
                       else record.channels[n] for n in record.names], record.start_time)

    def invert(self, name: str, values) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.range[name] + self.mean[name]

    def to_dict(self) -> dict:
        return {"mean": dict(self.mean), "range": dict(self.range)}


def standardize(channel: Channel, stats: Standardizer) -> Channel:
    r = stats.range[channel.name]
    if not r > 0:
        raise ZeroRange(f"channel {channel.name!r} has non-positive range")
    return channel.with_values((channel.values - stats.mean[channel.name]) / r)


def unstandardize(channel: Channel, stats: Standardizer) -> Channel:
    return channel.with_values(stats.invert(channel.name, channel.values))


# ---------------------------------------------------------------------------
# Experiments and folds

@dataclass(frozen=True)
class ExperimentSet:
    """Contiguous ``[start, stop)`` windows tiling a record, with group/fold labels.

    ``groups[i]`` is ``"train"``, ``"test"`` or ``None`` (unassigned);
    ``folds[i]`` is the 1-based fold of a training experiment, otherwise ``None``.
    """

    windows: tuple[tuple[int, int], ...]
    groups: tuple[str | None, ...] = ()
    folds: tuple[int | None, ...] = ()
    rng_seed: int | None = None
    n_samples: int | None = None

    def __post_init__(self):
        w = tuple((int(a), int(b)) for a, b in self.windows)
        object.__setattr__(self, "windows", w)
        if not self.groups:
            object.__setattr__(self, "groups", (None,) * len(w))
        if not self.folds:
            object.__setattr__(self, "folds", (None,) * len(w))
        prev = 0 if w else None
        for a, b in w:
            if b <= a or a < prev:
                raise ValidationError("experiment windows must be non-empty, ordered and disjoint")
            prev = b

    def __len__(self):
        return len(self.windows)

    @property
    def train(self) -> list[int]:
        return [i for i, g in enumerate(self.groups) if g == "train"]

    @property
    def test(self) -> list[int]:
        return [i for i, g in enumerate(self.groups) if g == "test"]

    @property
    def n_folds(self) -> int:
        return max((f for f in self.folds if f is not None), default=0)

    def fold(self, k: int) -> list[int]:
        return [i for i, f in enumerate(self.folds) if f == k]

    def select(self, idx: Iterable[int]) -> list[tuple[int, int]]:
        return [self.windows[i] for i in idx]

    def to_dict(self) -> dict:
        return {"windows": [list(w) for w in self.windows], "groups": list(self.groups),
                "folds": list(self.folds), "rng_seed": self.rng_seed}


def detect_setpoint_changes(setpoint, threshold: float = 0.02) -> np.ndarray:
    """Indices ``k`` where ``|sp[k] - sp[k-1]|`` exceeds ``threshold`` times the range."""
    sp = np.asarray(setpoint, dtype=float)
    span = np.ptp(sp)
    if span == 0:
        return np.array([], dtype=int)
    return np.flatnonzero(np.abs(np.diff(sp)) > threshold * span) + 1


def split_experiments(record: Record, setpoint_channel: str, lead_time: float = 600.0,
                      threshold: float = 0.02, min_length: float | None = None) -> ExperimentSet:
    """Cut the record ``lead_time`` seconds before every major setpoint change.

    A boundary that would leave a window shorter than ``min_length`` seconds
    (default: ``lead_time``) is dropped.
    """
    if setpoint_channel not in record:
        raise ValidationError(f"setpoint channel {setpoint_channel!r} not in record")
    n = len(record)
    dt = record.sample_period
    lead = int(round(lead_time / dt))
    min_len = int(round((lead_time if min_length is None else min_length) / dt))
    changes = detect_setpoint_changes(record[setpoint_channel], threshold)
    bounds = [0]
    for k in changes:
        b = k - lead
        if b - bounds[-1] >= max(min_len, 1) and n - b >= max(min_len, 1):
            bounds.append(int(b))
    if len(bounds) == 1:
        warnings.warn("no major setpoint change detected; the whole record is one experiment",
                      NoChangesDetected, stacklevel=2)
    bounds.append(n)
    return ExperimentSet(tuple(zip(bounds[:-1], bounds[1:])), n_samples=n)


def assign_groups(eset: ExperimentSet, n_test: int, k: int, seed: int) -> ExperimentSet:
    """Randomly pick ``n_test`` test experiments and deal the rest into ``k`` folds."""
    n = len(eset)
    if not 0 <= n_test < n:
        raise InvalidCounts(f"n_test={n_test} must be in [0, {n})")
    n_train = n - n_test
    if not 1 <= k <= n_train:
        raise InvalidCounts(f"k={k} must be in [1, {n_train}]")
    rng = substream(seed, "split")
    order = rng.permutation(n)
    groups = [None] * n
    folds = [None] * n
    for i in order[:n_test]:
        groups[i] = "test"
    train = order[n_test:]
    for fold_id, members in enumerate(np.array_split(train, k), start=1):
        for i in members:
            groups[i] = "train"
            folds[i] = fold_id
    return replace(eset, groups=tuple(groups), folds=tuple(folds), rng_seed=seed)
