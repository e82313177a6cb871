from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lfselect.models.similar_day import SdParams, calendar_similarity, forecast_sd, sd_similarity


def test_similarity_examples():
    assert sd_similarity(7, None) == pytest.approx(0.85)
    assert sd_similarity(1, None) == pytest.approx(0.9)
    assert sd_similarity(365, 1.0) == pytest.approx(1.0)
    assert sd_similarity(8, None) == pytest.approx(0.9 * 0.85)
    assert sd_similarity(7, 0.0) == pytest.approx(0.85 / 1e-6)


def test_params_validated():
    with pytest.raises(ValueError):
        SdParams(beta1=1.0)
    with pytest.raises(ValueError):
        sd_similarity(0, None)


@given(st.integers(1, 364), st.integers(1, 364))
def test_calendar_similarity_prefers_same_weekday_nearby(a, b):
    # within a year, the smaller gap with the same weekday offset is at least as similar
    if a % 7 == b % 7 and a < b:
        assert calendar_similarity(a) >= calendar_similarity(b)


def test_weekly_series_is_copied_exactly():
    week = np.random.default_rng(0).uniform(5, 10, size=7 * 24)
    y = np.tile(week, 6)
    start, k = 5 * 7 * 24, 24
    masked = np.r_[y[:start], np.zeros(y.size - start)]
    out, choices = forecast_sd(masked, np.zeros((y.size, 0)), start, k, 24)
    # without weather the best-scoring day is yesterday (0.9 > 0.85); a copy one week back needs the weather tie-break
    assert choices[0].delta_days == 1
    exog = np.tile(np.random.default_rng(1).normal(size=(7 * 24, 1)), (6, 1))
    out, choices = forecast_sd(masked, exog, start, k, 24)
    assert choices[0].delta_days == 7
    assert np.array_equal(out, y[start:start + k])


def test_candidate_days_precede_origin():
    y = np.arange(24 * 10, dtype=float)
    start = 24 * 8 + 5  # mid-day origin
    out, choices = forecast_sd(y, np.zeros((y.size, 0)), start, 30, 24)
    for c in choices:
        assert (c.t_hist + 1) * 24 <= start
    assert out.shape == (30,)
