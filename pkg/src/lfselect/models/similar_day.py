"""Similar-day forecaster: copy the historical day with the highest calendar/weather similarity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonConvergence


@dataclass(frozen=True)
class SdParams:
    beta1: float = 0.9   # per day within the week
    beta2: float = 0.85  # per whole week
    beta3: float = 0.95  # per whole year
    eps_d: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("beta1", "beta2", "beta3"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {v}")
        if self.eps_d <= 0:
            raise ValueError("eps_d must be positive")


@dataclass(frozen=True)
class SdChoice:
    t_fore: int
    t_hist: int
    delta_days: int
    anniversary: bool
    gamma: float


def calendar_similarity(delta_days, params: SdParams = SdParams()):
    """Numerator of the similarity; 1 on exact anniversaries (delta a multiple of 365)."""
    dt = np.asarray(delta_days, dtype=np.int64)
    free = (dt % 365 != 0).astype(float)
    val = (params.beta1 ** (free * (dt % 7))
           * params.beta2 ** (free * (dt // 7))
           * params.beta3 ** (free * (dt // 365)))
    return val if val.ndim else float(val)


def sd_similarity(delta_days: int, exo_distance: float | None,
                  params: SdParams = SdParams()) -> float:
    if delta_days < 1:
        raise ValueError("delta_days must be at least 1")
    dist = 1.0 if exo_distance is None else float(exo_distance)
    if dist < 0:
        raise ValueError("exo_distance must be non-negative")
    return calendar_similarity(delta_days, params) / max(dist, params.eps_d)


def forecast_sd(y: np.ndarray, exog: np.ndarray, test_start: int, horizon: int,
                spd: int, params: SdParams = SdParams()) -> tuple[np.ndarray, list[SdChoice]]:
    """Forecast ``y[test_start:test_start+horizon]`` day by day.

    A candidate historical day must lie entirely before ``test_start``. Weather
    channels are z-scored with statistics from the training range; with no
    channels the distance is 1 and the choice is purely calendar based.
    """
    n = y.size
    has_exog = exog.ndim == 2 and exog.shape[1] > 0
    if has_exog:
        mu = exog[:test_start].mean(axis=0)
        sd = exog[:test_start].std(axis=0)
        ez = (exog - mu) / np.where(sd > 0, sd, 1.0)
    first_day = test_start // spd
    last_day = (test_start + horizon - 1) // spd
    out = np.empty(horizon)
    choices = []
    for day in range(first_day, last_day + 1):
        lo_dt = day + 1 - test_start // spd
        dts = np.arange(max(1, lo_dt), day + 1)
        if dts.size == 0:
            raise NonConvergence("no complete historical day before the forecast origin")
        if has_exog:
            off = np.arange(spd)
            off = off[day * spd + off < n]
            target = ez[day * spd + off]
            hist = ez[(day - dts)[:, None] * spd + off[None, :]]
            dist = np.sqrt(np.sum((hist - target[None]) ** 2, axis=(1, 2)))
        else:
            dist = np.ones(dts.size)
        gamma = calendar_similarity(dts, params) / np.maximum(dist, params.eps_d)
        k = int(np.argmax(gamma))  # first maximum -> smallest gap
        dt = int(dts[k])
        a = max(day * spd, test_start)
        b = min((day + 1) * spd, test_start + horizon)
        out[a - test_start: b - test_start] = y[a - dt * spd: b - dt * spd]
        choices.append(SdChoice(day, day - dt, dt, dt % 365 == 0, float(gamma[k])))
    return out, choices
