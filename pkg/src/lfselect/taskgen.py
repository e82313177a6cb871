"""Synthetic heterogeneous task corpora: weather, building loads and the requirement grid."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from itertools import product
from pathlib import Path

import numpy as np

from .errors import EmptySpec, GridMismatch
from .series import (
    COMMERCIAL,
    RESIDENTIAL,
    CsvSchema,
    LFTask,
    LoadSeries,
    TaskRequirements,
    WeatherSeries,
    block_mean,
    ingest_csv,
    write_csv,
)

WEATHER_NAMES = (
    "temperature", "humidity", "dew_point", "apparent_temp", "wind_speed", "wind_chill",
    "cloud_cover", "solar_irradiance", "pressure", "precipitation", "temp_lag_1h", "temp_mean_24h",
)
EPOCH = datetime(2021, 1, 1)
COMFORT_TEMP = 18.0


def _flatten(parts) -> list[int]:
    out = []
    for p in parts:
        if isinstance(p, (tuple, list)):
            out.extend(_flatten(p))
        elif isinstance(p, str):
            out.extend(p.encode())
        else:
            out.append(int(p) & 0xFFFFFFFF)
    return out


def _seed_seq(*parts) -> np.random.SeedSequence:
    """Seed sequence from a nested mix of ints and strings."""
    return np.random.SeedSequence(_flatten(parts))


def _rng(*parts) -> np.random.Generator:
    return np.random.default_rng(_seed_seq(*parts))


def _ar1(rng: np.random.Generator, n: int, phi: float, sigma: float) -> np.ndarray:
    """Stationary AR(1) path with marginal std ``sigma``."""
    from scipy.signal import lfilter

    e = rng.standard_normal(n) * sigma * math.sqrt(1.0 - phi * phi)
    e[0] = rng.standard_normal() * sigma
    return lfilter([1.0], [1.0, -phi], e)


def _fine_step(granularity: float) -> float:
    return min(granularity, 1.0)


def synth_weather(days: int, granularity: float, seed, n_channels: int = 12,
                  start_day: int = 0) -> WeatherSeries:
    """Temperature = annual sinusoid + daily sinusoid + AR(1) noise, plus derived channels.

    Sub-daily grids are generated directly; a daily grid is the block mean of an
    hourly path.
    """
    if days < 1:
        raise ValueError("days must be at least 1")
    if n_channels not in (0, 1, 12):
        raise ValueError("weather channel count must be 0, 1 or 12")
    if n_channels == 0:
        return WeatherSeries.empty(int(round(days * 24 / granularity)))
    rng = _rng("weather", seed)
    step = _fine_step(granularity)
    n = int(round(days * 24 / step))
    hours = np.arange(n) * step
    doy = start_day + hours / 24.0
    annual = 12.0 * np.sin(2 * np.pi * (doy - 110.0) / 365.0)
    daily = 4.5 * np.sin(2 * np.pi * (hours % 24 - 9.0) / 24.0)
    phi = 0.97 ** step
    temp = 14.0 + annual + daily + _ar1(rng, n, phi, 2.0)
    cols = [temp]
    if n_channels == 12:
        lag = max(1, int(round(1.0 / step)))
        day = max(1, int(round(24.0 / step)))
        humidity = np.clip(65.0 - 1.8 * (temp - 14.0) + _ar1(rng, n, phi, 6.0), 5.0, 100.0)
        dew = temp - (100.0 - humidity) / 5.0
        wind = np.abs(3.0 + _ar1(rng, n, 0.9 ** step, 2.0))
        apparent = temp + 0.33 * (humidity / 100.0 * 6.105) - 0.7 * wind
        chill = np.where(temp < 10.0, temp - 0.4 * wind, temp)
        cloud = 1.0 / (1.0 + np.exp(-_ar1(rng, n, 0.95 ** step, 1.5)))
        sun = np.maximum(0.0, np.sin(np.pi * (hours % 24 - 6.0) / 12.0))
        irradiance = 900.0 * sun * (1.0 - 0.75 * cloud) * (1.0 + 0.3 * annual / 12.0)
        pressure = 1013.0 + _ar1(rng, n, 0.995 ** step, 6.0)
        precip = np.maximum(0.0, cloud - 0.7) * rng.exponential(2.0, n)
        temp_lag = np.r_[np.full(lag, temp[0]), temp[:-lag]]
        kernel = np.ones(day) / day
        temp_mean = np.convolve(np.r_[np.full(day - 1, temp[0]), temp], kernel, mode="valid")
        cols += [humidity, dew, apparent, wind, chill, cloud, irradiance, pressure, precip,
                 temp_lag, temp_mean]
    values = np.column_stack(cols)
    if granularity > step:
        values = block_mean(values, int(round(granularity / step)))
    return WeatherSeries(WEATHER_NAMES[:n_channels], values)


@dataclass(frozen=True)
class SynthProfileParams:
    base_kw: float
    amplitude: float
    phase_hours: float
    weekend_factor: float
    temp_sensitivity: float
    noise_std: float
    noise_phi: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.base_kw <= 0:
            raise ValueError("base level must be positive")
        if self.noise_std < 0:
            raise ValueError("noise std must be non-negative")


def _bump(h: np.ndarray, centre: float, width: float) -> np.ndarray:
    d = (h - centre + 12.0) % 24.0 - 12.0
    return np.exp(-0.5 * (d / width) ** 2)


def daily_shape(load_type: int, hour_of_day: np.ndarray) -> np.ndarray:
    """Canonical relative daily profile: evening peak (residential) or business hours (commercial)."""
    h = np.asarray(hour_of_day, dtype=float)
    if load_type == RESIDENTIAL:
        return 0.55 + 0.35 * _bump(h, 7.5, 1.5) + 0.9 * _bump(h, 19.5, 2.2)
    if load_type == COMMERCIAL:
        rise = 1.0 / (1.0 + np.exp(-(h - 8.0) * 2.0))
        fall = 1.0 / (1.0 + np.exp((h - 18.0) * 2.0))
        return 0.3 + 1.0 * rise * fall + 0.1 * _bump(h, 13.0, 2.0)
    raise ValueError("load_type must be 0 or 1")


def profile_params(load_type: int, rng: np.random.Generator) -> SynthProfileParams:
    if load_type == RESIDENTIAL:
        return SynthProfileParams(
            base_kw=float(rng.uniform(0.8, 2.0)), amplitude=float(rng.uniform(0.8, 1.2)),
            phase_hours=float(rng.normal(0.0, 0.7)), weekend_factor=float(rng.uniform(1.05, 1.2)),
            temp_sensitivity=float(rng.uniform(0.03, 0.12)), noise_std=float(rng.uniform(0.25, 0.45)))
    return SynthProfileParams(
        base_kw=float(rng.uniform(8.0, 25.0)), amplitude=float(rng.uniform(0.9, 1.1)),
        phase_hours=float(rng.normal(0.0, 0.5)), weekend_factor=float(rng.uniform(0.3, 0.5)),
        temp_sensitivity=float(rng.uniform(0.3, 1.0)), noise_std=float(rng.uniform(0.12, 0.25)))


def _building_load(load_type: int, p: SynthProfileParams, hours: np.ndarray,
                   weekday: np.ndarray, temp: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    shape = 1.0 + p.amplitude * (daily_shape(load_type, hours % 24 - p.phase_hours) - 1.0)
    week = np.where(weekday >= 5, p.weekend_factor, 1.0)
    y = p.base_kw * shape * week + p.temp_sensitivity * np.abs(temp - COMFORT_TEMP)
    if p.noise_std > 0:
        step = hours[1] - hours[0] if hours.size > 1 else 1.0
        y = y + p.base_kw * _ar1(rng, hours.size, p.noise_phi ** step, p.noise_std)
    return np.maximum(y, 0.0)


def synth_building(load_type: int, days: int, granularity: float, temperature: np.ndarray,
                   seed, params: SynthProfileParams | None = None,
                   start: datetime = EPOCH) -> LoadSeries:
    """One building on the requested grid; ``temperature`` must be on that grid too."""
    step = _fine_step(granularity)
    n_fine = int(round(days * 24 / step))
    n_out = int(round(days * 24 / granularity))
    temperature = np.asarray(temperature, dtype=float)
    if temperature.size != n_out:
        raise GridMismatch(f"temperature has {temperature.size} samples, grid has {n_out}")
    rng = _rng("building", seed)
    p = params if params is not None else profile_params(load_type, rng)
    hours = np.arange(n_fine) * step
    weekday = (start.weekday() + (hours // 24).astype(int)) % 7
    temp_fine = np.repeat(temperature, int(round(granularity / step)))
    y = _building_load(load_type, p, hours, weekday, temp_fine, rng)
    if granularity > step:
        y = block_mean(y, int(round(granularity / step)))
    return LoadSeries(start, float(granularity), y)


def synth_aggregate(load_type: int, n_customers: int, days: int, granularity: float,
                    temperature: np.ndarray, seed, start: datetime = EPOCH) -> LoadSeries:
    """Sum of ``n_customers`` independently parameterized buildings of one load type.

    Each building's periodic part is evaluated over one day and the daily sums are
    tiled; the independent AR(1) noise terms share one coefficient, so their sum is
    drawn as a single AR(1) path with the pooled variance.
    """
    step = _fine_step(granularity)
    n_fine = int(round(days * 24 / step))
    spd = int(round(24 / step))
    temp_fine = np.repeat(np.asarray(temperature, dtype=float), int(round(granularity / step)))
    if temp_fine.size != n_fine:
        raise GridMismatch("temperature does not match the requested grid")
    root = _seed_seq("aggregate", seed)
    params = [profile_params(load_type, np.random.default_rng(c)) for c in root.spawn(n_customers)]
    base = np.array([p.base_kw for p in params])
    amp = np.array([p.amplitude for p in params])
    phase = np.array([p.phase_hours for p in params])
    hod = np.arange(spd) * step
    shapes = base[:, None] * (1.0 + amp[:, None] * (daily_shape(load_type, hod[None, :] - phase[:, None]) - 1.0))
    weekday_day = shapes.sum(axis=0)
    weekend_day = (np.array([p.weekend_factor for p in params])[:, None] * shapes).sum(axis=0)

    hours = np.arange(n_fine) * step
    weekday = (start.weekday() + (hours // 24).astype(int)) % 7
    slot = np.arange(n_fine) % spd
    total = np.where(weekday >= 5, weekend_day[slot], weekday_day[slot])
    total += sum(p.temp_sensitivity for p in params) * np.abs(temp_fine - COMFORT_TEMP)
    sigma = float(np.sqrt(sum((p.base_kw * p.noise_std) ** 2 for p in params)))
    rng = np.random.default_rng(root.spawn(1)[0])
    total += _ar1(rng, n_fine, params[0].noise_phi ** step, sigma)
    total = np.maximum(total, 0.0)
    if granularity > step:
        total = block_mean(total, int(round(granularity / step)))
    return LoadSeries(start, float(granularity), total)


@dataclass(frozen=True)
class LevelSpec:
    name: str
    customers: dict  # load type -> (lo, hi) inclusive
    weather_counts: tuple[int, ...]
    horizons: tuple[int, ...]
    granularities: tuple[float, ...]


DEFAULT_LEVELS = (
    LevelSpec("building", {RESIDENTIAL: (1, 1), COMMERCIAL: (1, 1)}, (0, 1), (4, 24, 168), (0.25, 0.5, 1.0)),
    LevelSpec("transformer", {RESIDENTIAL: (3, 10), COMMERCIAL: (2, 4)}, (0, 1), (4, 24, 168), (0.25, 0.5, 1.0)),
    LevelSpec("microgrid", {RESIDENTIAL: (50, 300), COMMERCIAL: (50, 300)}, (0, 1), (4, 24, 168), (0.25, 0.5, 1.0)),
    LevelSpec("feeder", {RESIDENTIAL: (1000, 2000), COMMERCIAL: (1000, 2000)}, (0, 1, 12),
              (4, 24, 168, 720), (1.0, 24.0)),
)

CONSTRAINT_NOTES = (
    "loads are residential or commercial; each grid combination gets one load type from a seeded balanced draw",
    "building, transformer and microgrid levels: short-term horizons (4, 24, 168 h), weather counts 0 or 1, sub-daily grids",
    "feeder level: horizons up to 720 h, weather counts 0, 1 or 12, hourly or daily grids",
    "history lengths 30, 180, 360 days at every level",
    "dropped: horizons that are not a whole number of samples, and histories shorter than two horizons",
)


@dataclass(frozen=True)
class CorpusSpec:
    levels: tuple[LevelSpec, ...] = DEFAULT_LEVELS
    history_days: tuple[int, ...] = (30, 180, 360)
    seed: int = 0
    exclusions: bool = True

    def __post_init__(self) -> None:
        if not self.levels or not self.history_days:
            raise EmptySpec("corpus spec has an empty grid dimension")
        for lv in self.levels:
            if not (lv.weather_counts and lv.horizons and lv.granularities and lv.customers):
                raise EmptySpec(f"level {lv.name} has an empty grid dimension")


@dataclass(frozen=True)
class Combination:
    level: str
    granularity_hours: float
    history_days: int
    horizon_hours: int
    n_weather: int

    @property
    def task_id(self) -> str:
        g = f"{self.granularity_hours:g}".replace(".", "p")
        return f"{self.level}-g{g}-d{self.history_days}-h{self.horizon_hours}-w{self.n_weather}"


def _admissible(c: Combination) -> bool:
    ratio = c.horizon_hours / c.granularity_hours
    if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
        return False
    return c.history_days * 24 >= 2 * c.horizon_hours


def enumerate_grid(spec: CorpusSpec) -> list[Combination]:
    out = []
    for lv in spec.levels:
        for g, d, h, w in product(lv.granularities, spec.history_days, lv.horizons, lv.weather_counts):
            c = Combination(lv.name, float(g), int(d), int(h), int(w))
            if not spec.exclusions or _admissible(c):
                out.append(c)
    if not out:
        raise EmptySpec("grid constraints leave no task")
    return out


def assign_load_types(n: int, seed: int) -> np.ndarray:
    """Balanced residential/commercial assignment, shuffled under the master seed."""
    types = np.arange(n) % 2
    return _rng("load-types", seed).permutation(types)


@dataclass(frozen=True)
class TaskPlan:
    combination: Combination
    load_type: int
    n_customers: int
    start_day: int


def plan_corpus(spec: CorpusSpec) -> list[TaskPlan]:
    combos = enumerate_grid(spec)
    types = assign_load_types(len(combos), spec.seed)
    levels = {lv.name: lv for lv in spec.levels}
    plans = []
    for c, lt in zip(combos, types):
        rng = _rng("plan", spec.seed, c.task_id)
        lo, hi = levels[c.level].customers[int(lt)]
        plans.append(TaskPlan(c, int(lt), int(rng.integers(lo, hi + 1)), int(rng.integers(0, 365))))
    return plans


def build_task(plan: TaskPlan, seed: int) -> LFTask:
    c = plan.combination
    start = EPOCH + timedelta(days=plan.start_day)
    weather = synth_weather(c.history_days, c.granularity_hours, (seed, c.task_id), 12, plan.start_day)
    temp = weather.values[:, 0]
    load = synth_aggregate(plan.load_type, plan.n_customers, c.history_days, c.granularity_hours,
                           temp, (seed, c.task_id), start)
    given = WeatherSeries(weather.names[: c.n_weather], weather.values[:, : c.n_weather])
    req = TaskRequirements(c.granularity_hours, c.history_days, c.horizon_hours, c.n_weather,
                           plan.n_customers, plan.load_type)
    return LFTask(c.task_id, load, given, req)


def generate_corpus(spec: CorpusSpec = CorpusSpec()) -> list[LFTask]:
    return [build_task(p, spec.seed) for p in plan_corpus(spec)]


def corpus_index(spec: CorpusSpec, tasks) -> dict:
    return {
        "seed": spec.seed,
        "constraints": list(CONSTRAINT_NOTES) if spec.exclusions else [],
        "tasks": [{"id": t.id, **t.requirements.to_dict()} for t in tasks],
    }


def write_corpus(directory, tasks, spec: CorpusSpec) -> Path:
    """Write ``index.json`` plus ``<id>.json`` (requirements) and ``<id>.csv`` per task."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for t in tasks:
        (root / f"{t.id}.json").write_text(
            json.dumps(t.requirements.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        write_csv(root / f"{t.id}.csv", t.load, t.weather)
    (root / "index.json").write_text(
        json.dumps(corpus_index(spec, tasks), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return root


def read_task(directory, task_id: str) -> LFTask:
    root = Path(directory)
    req = TaskRequirements.from_dict(json.loads((root / f"{task_id}.json").read_text(encoding="utf-8")))
    load, weather = ingest_csv(root / f"{task_id}.csv", CsvSchema())
    return LFTask(task_id, load, weather, req)


def read_corpus(directory) -> list[LFTask]:
    root = Path(directory)
    index = json.loads((root / "index.json").read_text(encoding="utf-8"))
    return [read_task(root, entry["id"]) for entry in index["tasks"]]
