"""Time-series containers, CSV ingestion, resampling and causal splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from datetime import datetime, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EmptyFile,
    GridMismatch,
    MalformedRow,
    NonIntegralRatio,
    NonUniformGrid,
    TooShort,
    Upsample,
)

GRANULARITIES = (0.25, 0.5, 1.0, 24.0)
HISTORY_DAYS = (30, 180, 360)
HORIZONS = (4, 24, 168, 720)
WEATHER_COUNTS = (0, 1, 12)
RESIDENTIAL, COMMERCIAL = 0, 1

_TS_FORMAT = "%Y-%m-%dT%H:%M:%S"


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LoadSeries:
    """Load samples in kW on a uniform grid of ``step`` hours."""

    start_time: datetime
    step: float
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen_array(self.values, 1))
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.values.size == 0:
            raise ValueError("load series is empty")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("load series contains non-finite values")

    def __len__(self) -> int:
        return self.values.size

    def time_at(self, n: int) -> datetime:
        return self.start_time + timedelta(hours=n * self.step)

    @property
    def samples_per_day(self) -> float:
        return 24.0 / self.step


@dataclass(frozen=True)
class WeatherSeries:
    """Named exogenous channels; ``values`` has shape (N, n_channels)."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", _frozen_array(self.values, 2))
        if self.values.shape[1] != len(self.names):
            raise ValueError("channel names do not match value columns")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate weather channel names")

    @classmethod
    def empty(cls, length: int) -> WeatherSeries:
        return cls((), np.zeros((length, 0)))

    @property
    def channel_count(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return self.values.shape[0]

    def channel(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]


@dataclass(frozen=True)
class TaskRequirements:
    """The requirement half of a task descriptor (one row of the task grid)."""

    granularity_hours: float
    history_days: int
    horizon_hours: int
    n_weather: int
    n_customers: int
    load_type: int

    def __post_init__(self) -> None:
        if self.granularity_hours not in GRANULARITIES:
            raise ValueError(f"granularity_hours must be one of {GRANULARITIES}")
        if self.history_days not in HISTORY_DAYS:
            raise ValueError(f"history_days must be one of {HISTORY_DAYS}")
        if self.horizon_hours not in HORIZONS:
            raise ValueError(f"horizon_hours must be one of {HORIZONS}")
        if self.n_weather not in WEATHER_COUNTS:
            raise ValueError(f"n_weather must be one of {WEATHER_COUNTS}")
        if int(self.n_customers) != self.n_customers or self.n_customers < 1:
            raise ValueError("n_customers must be a positive integer")
        if self.load_type not in (RESIDENTIAL, COMMERCIAL):
            raise ValueError("load_type must be 0 (residential) or 1 (commercial)")
        ratio = self.horizon_hours / self.granularity_hours
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("horizon must be a whole number of samples")

    @property
    def horizon_samples(self) -> int:
        return int(round(self.horizon_hours / self.granularity_hours))

    def to_dict(self) -> dict:
        return {
            "granularity_hours": float(self.granularity_hours),
            "history_days": int(self.history_days),
            "horizon_hours": int(self.horizon_hours),
            "n_weather": int(self.n_weather),
            "n_customers": int(self.n_customers),
            "load_type": int(self.load_type),
        }

    @classmethod
    def from_dict(cls, data: dict) -> TaskRequirements:
        fields = ("granularity_hours", "history_days", "horizon_hours",
                  "n_weather", "n_customers", "load_type")
        missing = [k for k in fields if k not in data]
        if missing:
            raise KeyError(f"requirements missing keys: {missing}")
        return cls(
            granularity_hours=float(data["granularity_hours"]),
            history_days=int(data["history_days"]),
            horizon_hours=int(data["horizon_hours"]),
            n_weather=int(data["n_weather"]),
            n_customers=int(data["n_customers"]),
            load_type=int(data["load_type"]),
        )


@dataclass(frozen=True)
class LFTask:
    """One forecasting task: aligned load and weather plus its requirements."""

    id: str
    load: LoadSeries
    weather: WeatherSeries
    requirements: TaskRequirements

    def __post_init__(self) -> None:
        if len(self.weather) != len(self.load):
            raise GridMismatch("weather and load lengths differ")
        if self.weather.channel_count != self.requirements.n_weather:
            raise ValueError(
                f"task {self.id}: {self.weather.channel_count} weather channels, "
                f"requirements say {self.requirements.n_weather}"
            )
        if abs(self.load.step - self.requirements.granularity_hours) > 1e-9:
            raise GridMismatch("load step does not match requirements granularity")
        if len(self.load) < self.horizon:
            raise TooShort("load shorter than the forecast horizon")

    @property
    def horizon(self) -> int:
        """K_j, the test length in samples."""
        return self.requirements.horizon_samples

    @property
    def y(self) -> np.ndarray:
        return self.load.values

    @property
    def exog(self) -> np.ndarray:
        return self.weather.values

    def __len__(self) -> int:
        return len(self.load)

    @cached_property
    def period(self) -> int:
        """Dominant seasonal period in samples (the periodicity meta-feature), computed once."""
        from .features import periodicity

        return periodicity(self.y, self.requirements.granularity_hours)


@dataclass(frozen=True)
class SplitPair:
    """Causal split: train is ``[0, test_start)``, test is ``[test_start, test_start+K)``."""

    test_start: int
    horizon: int
    n_total: int = field(default=0)

    def __post_init__(self) -> None:
        if self.test_start < 1 or self.horizon < 1:
            raise ValueError("split needs at least one training and one test sample")
        if self.n_total and self.test_start + self.horizon > self.n_total:
            raise ValueError("test range runs past the end of the series")

    @property
    def train_range(self) -> tuple[int, int]:
        return (0, self.test_start)

    @property
    def test_range(self) -> tuple[int, int]:
        return (self.test_start, self.test_start + self.horizon)

    @property
    def train_len(self) -> int:
        return self.test_start


def split_positions(n: int, k: int) -> tuple[int, int]:
    """Inclusive range of admissible test-window starts for length ``n``, horizon ``k``."""
    if n < 2 * k:
        raise TooShort(f"series of {n} samples cannot hold two horizons of {k}")
    return max(n - 2 * k, 1), n - k


def draw_split(n: int, k: int, rng: np.random.Generator) -> SplitPair:
    lo, hi = split_positions(n, k)
    return SplitPair(int(rng.integers(lo, hi + 1)), k, n)


def draw_splits(n: int, k: int, count: int, rng: np.random.Generator) -> list[SplitPair]:
    """``count`` splits by random-start systematic sampling, in shuffled order.

    Each start is marginally uniform over the admissible positions, as with
    :func:`draw_split`, but the sample spreads evenly over the range: with at
    least as many draws as positions, every position is used floor or ceil
    of count/positions times.
    """
    if count < 1:
        raise ValueError("count must be positive")
    lo, hi = split_positions(n, k)
    P = hi - lo + 1
    step = P / count
    u = rng.uniform(0.0, step)
    offsets = np.minimum(np.floor(u + step * np.arange(count)).astype(int), P - 1)
    return [SplitPair(lo + int(o), k, n) for o in rng.permutation(offsets)]


def random_split(task: LFTask, seed) -> SplitPair:
    """Place a contiguous test window of K samples uniformly in the last 2K samples."""
    return draw_split(len(task), task.horizon, np.random.default_rng(seed))


def resample(series: LoadSeries, target_step: float) -> LoadSeries:
    """Block-mean resampling to a coarser integer multiple of the source step."""
    ratio = target_step / series.step
    if ratio < 1 - 1e-12:
        raise Upsample(f"cannot resample {series.step} h to finer {target_step} h")
    factor = int(round(ratio))
    if abs(ratio - factor) > 1e-9:
        raise NonIntegralRatio(f"{target_step} h is not a multiple of {series.step} h")
    return LoadSeries(series.start_time, float(target_step), block_mean(series.values, factor))


def block_mean(values: np.ndarray, factor: int) -> np.ndarray:
    """Mean over consecutive blocks of ``factor`` rows; a trailing partial block is dropped."""
    n_out = values.shape[0] // factor
    if n_out == 0:
        raise TooShort("series shorter than one resampling window")
    trimmed = np.asarray(values)[: n_out * factor]
    return trimmed.reshape((n_out, factor) + trimmed.shape[1:]).mean(axis=1)


def aggregate(series_list: Sequence[LoadSeries]) -> LoadSeries:
    """Pointwise sum of grid-matched series."""
    if not series_list:
        raise ValueError("nothing to aggregate")
    first = series_list[0]
    for s in series_list[1:]:
        if s.start_time != first.start_time or s.step != first.step or len(s) != len(first):
            raise GridMismatch("series do not share a grid")
    total = np.sum([s.values for s in series_list], axis=0)
    return LoadSeries(first.start_time, first.step, total)


@dataclass(frozen=True)
class CsvSchema:
    """Column naming for task CSVs; ``weather=None`` means every other column."""

    timestamp: str = "timestamp"
    load: str = "load"
    weather: tuple[str, ...] | None = None


def ingest_csv(path: str | Path, schema: CsvSchema = CsvSchema()) -> tuple[LoadSeries, WeatherSeries]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise EmptyFile(f"{path}: no header")
        header = [h.strip() for h in header]
        for col in (schema.timestamp, schema.load):
            if col not in header:
                raise MalformedRow(f"{path}: missing column {col!r}")
        if schema.weather is None:
            wnames = [h for h in header if h not in (schema.timestamp, schema.load)]
        else:
            wnames = list(schema.weather)
            for col in wnames:
                if col not in header:
                    raise MalformedRow(f"{path}: missing weather column {col!r}")
        i_ts, i_load = header.index(schema.timestamp), header.index(schema.load)
        i_w = [header.index(c) for c in wnames]

        stamps, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                stamps.append(datetime.fromisoformat(row[i_ts].strip()))
                rows.append([float(row[i_load])] + [float(row[i]) for i in i_w])
            except ValueError as exc:
                raise MalformedRow(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise EmptyFile(f"{path}: no data rows")

    order = sorted(range(len(stamps)), key=stamps.__getitem__)
    stamps = [stamps[i] for i in order]
    data = np.array([rows[i] for i in order], dtype=float)
    if not np.all(np.isfinite(data)):
        raise MalformedRow(f"{path}: non-finite values")

    if len(stamps) > 1:
        deltas = {(b - a).total_seconds() for a, b in zip(stamps, stamps[1:])}
        if 0.0 in deltas:
            raise NonUniformGrid(f"{path}: duplicate timestamps")
        if len(deltas) != 1:
            raise NonUniformGrid(f"{path}: gaps in the timestamp grid")
        step = deltas.pop() / 3600.0
    else:
        step = 1.0
    load = LoadSeries(stamps[0], step, data[:, 0])
    weather = WeatherSeries(tuple(wnames), data[:, 1:])
    return load, weather


def write_csv(path: str | Path, load: LoadSeries, weather: WeatherSeries | None = None) -> None:
    """Write a task CSV; floats use ``repr`` so a re-read is exact."""
    weather = weather if weather is not None else WeatherSeries.empty(len(load))
    if len(weather) != len(load):
        raise GridMismatch("weather and load lengths differ")
    step = timedelta(hours=load.step)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(("timestamp", "load") + weather.names) + "\n")
        t = load.start_time
        w = weather.values
        for n, v in enumerate(load.values.tolist()):
            cells = [t.strftime(_TS_FORMAT), repr(v)]
            if w.shape[1]:
                cells.extend(repr(x) for x in w[n].tolist())
            fh.write(",".join(cells) + "\n")
            t += step


def samples_per_day(step_hours: float) -> int:
    spd = 24.0 / step_hours
    return max(1, int(math.floor(spd + 1e-9)))
