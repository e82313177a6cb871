from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lfselect.errors import DegenerateSeries, LagOutOfRange
from lfselect.features import (
    FEATURE_NAMES,
    FeatureVector,
    acf,
    extract_features,
    fickleness,
    h_acf,
    kurtosis,
    load_statistics,
    pacf,
    periodicity,
    skewness,
)

from conftest import make_task


# ---------------------------------------------------------------- brute-force oracles

def bf_moment(y, p):
    n = len(y)
    m = math.fsum(y) / n
    s = math.sqrt(math.fsum((v - m) ** 2 for v in y) / n)
    return math.fsum(((v - m) / s) ** p for v in y) / n


def bf_fickleness(y):
    m = sum(y) / len(y)
    sg = [(v > m) - (v < m) for v in y]
    return sum(1 for a, b in zip(sg, sg[1:]) if a == b) / len(y)


def bf_acf(y, k):
    n = len(y)
    m = math.fsum(y) / n
    num = math.fsum((y[t] - m) * (y[t + k] - m) for t in range(n - k)) / (n - k)
    return num / (math.fsum((v - m) ** 2 for v in y) / n)


def bf_pacf(y, k):
    """Last coefficient of the order-k Yule-Walker solution."""
    if k == 0:
        return 1.0
    r = np.array([bf_acf(y, i) for i in range(k + 1)])
    R = np.array([[r[abs(i - j)] for j in range(k)] for i in range(k)])
    return float(np.linalg.solve(R, r[1:])[-1])


def rel_close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


# ---------------------------------------------------------------- worked examples

def test_kurtosis_examples():
    assert kurtosis([-1.0, 1.0] * 50) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DegenerateSeries):
        kurtosis([2.0] * 10)
    z = np.random.default_rng(0).standard_normal(10**6)
    assert kurtosis(z) == pytest.approx(3.0, abs=0.05)


def test_skewness_examples():
    assert skewness([-1.0, 0.0, 1.0]) == pytest.approx(0.0, abs=1e-15)
    assert skewness([0.0, 0.0, 0.0, 1.0]) == pytest.approx(2 / math.sqrt(3), rel=1e-12)
    assert skewness([0.0, 0.0, 0.0, 1.0]) == pytest.approx(1.1547, abs=1e-4)


def test_fickleness_examples():
    assert fickleness([-1.0, 1.0] * 5) == 0.0
    assert fickleness([3.0] * 8) == pytest.approx(7 / 8)
    assert fickleness([1, 2, 3, 4, 5, 6]) == pytest.approx(4 / 6)


def test_acf_and_pacf_examples():
    rng = np.random.default_rng(1)
    y = rng.normal(size=500)
    assert acf(y, 0) == 1.0
    t = np.arange(24 * 20)
    assert acf(np.sin(2 * np.pi * t / 24), 24) == pytest.approx(1.0, abs=1e-2)
    n = 4000
    e = rng.standard_normal(n + 200)
    x = np.zeros_like(e)
    for i in range(1, e.size):
        x[i] = 0.7 * x[i - 1] + e[i]
    x = x[200:]
    assert abs(pacf(x, 2)) <= 2 / math.sqrt(n)
    assert h_acf(x) == pytest.approx(0.7, abs=0.05)
    with pytest.raises(LagOutOfRange):
        acf(y, 251)


def test_h_acf_white_noise_and_sine():
    z = np.random.default_rng(2).standard_normal(10**4)
    assert h_acf(z) <= 0.05
    t = np.arange(24 * 30)
    assert h_acf(np.sin(2 * np.pi * t / 24)) == pytest.approx(1.0, abs=0.05)


def test_periodicity_examples():
    rng = np.random.default_rng(3)
    t = np.arange(24 * 60)
    hourly = 5 + np.sin(2 * np.pi * t / 24) + 0.1 * rng.normal(size=t.size)
    assert periodicity(hourly, 1.0) == 24
    d = np.arange(360)
    monthly = 5 + np.sin(2 * np.pi * d / 30) + 0.05 * rng.normal(size=d.size)
    assert periodicity(monthly, 24.0) == 30
    assert periodicity(np.sin(2 * np.pi * d / 12), 24.0) == 12


def test_extract_features_contract():
    rng = np.random.default_rng(4)
    t = np.arange(720)
    y = 10 + np.sin(2 * np.pi * t / 24) + 0.1 * rng.normal(size=720)
    task = make_task(y, 1.0, 30, 24, weather=rng.normal(size=720))
    f = extract_features(task)
    assert f.data_length == 30 and f.granularity == 1 and f.n_weather == 1
    assert f.to_array().shape == (len(FEATURE_NAMES),)
    assert FeatureVector.from_array(f.to_array()) == f
    with pytest.raises(DegenerateSeries):
        extract_features(make_task(np.full(720, 3.0)))


def test_statistics_match_direct_formulas():
    rng = np.random.default_rng(5)
    t = np.arange(600)
    y = 50 + 7 * np.sin(2 * np.pi * t / 24) + rng.normal(size=600)
    s = load_statistics(y, 1.0)
    yl = y.tolist()
    assert rel_close(s["mean"], math.fsum(yl) / 600)
    assert rel_close(s["std"], math.sqrt(math.fsum((v - s["mean"]) ** 2 for v in yl) / 600))
    assert rel_close(s["kurtosis"], bf_moment(yl, 4))
    assert rel_close(s["skewness"], bf_moment(yl, 3))
    assert rel_close(s["fickleness"], bf_fickleness(yl))
    assert s["max"] == max(yl) and s["min"] == min(yl)
    assert s["periodicity"] == 24


# ---------------------------------------------------------------- properties

series = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=12, max_size=60).filter(
    lambda v: np.std(v) > 1e-3 * max(1.0, np.max(np.abs(v))))


@given(series, st.floats(0.01, 100), st.floats(-1e3, 1e3))
def test_affine_invariance(y, a, b):
    y = np.asarray(y)
    z = a * y + b
    assert kurtosis(z) == pytest.approx(kurtosis(y), rel=1e-6, abs=1e-9)
    assert skewness(z) == pytest.approx(skewness(y), rel=1e-6, abs=1e-6)
    assert fickleness(z) == fickleness(y) or np.any(np.isclose(y, y.mean(), rtol=0, atol=1e-9 * np.abs(y).max()))
    for k in (1, 3):
        assert acf(z, k) == pytest.approx(acf(y, k), rel=1e-6, abs=1e-9)
        assert pacf(z, k) == pytest.approx(pacf(y, k), rel=1e-6, abs=1e-9)


@given(series)
def test_skewness_is_odd(y):
    y = np.asarray(y)
    assert skewness(-y) == pytest.approx(-skewness(y), rel=1e-9, abs=1e-12)
