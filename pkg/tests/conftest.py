from __future__ import annotations

from datetime import datetime

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lfselect.series import LFTask, LoadSeries, TaskRequirements, WeatherSeries

settings.register_profile("lfselect", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lfselect")

START = datetime(2021, 1, 4)


def make_task(y, granularity=1.0, days=30, horizon=24, weather=None, task_id="t", n_customers=1,
              load_type=0) -> LFTask:
    y = np.asarray(y, dtype=float)
    if weather is None:
        ws = WeatherSeries.empty(y.size)
    else:
        w = np.atleast_2d(np.asarray(weather, dtype=float))
        w = w.T if w.shape[0] != y.size else w
        ws = WeatherSeries(tuple(f"w{i}" for i in range(w.shape[1])), w)
    req = TaskRequirements(granularity, days, horizon, ws.channel_count, n_customers, load_type)
    return LFTask(task_id, LoadSeries(START, granularity, y), ws, req)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def daily_task():
    """30 days hourly: daily cycle plus a little noise."""
    r = np.random.default_rng(7)
    t = np.arange(720)
    y = 10 + 3 * np.sin(2 * np.pi * t / 24) + 0.2 * r.standard_normal(720)
    return make_task(y, 1.0, 30, 24)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
