from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lfselect.models.svr import (
    SvrConfig,
    fit_svr,
    forecast_svr,
    gaussian_kernel,
    kkt_violation,
    median_bandwidth,
    solve_dual,
    svr_lags,
    train_svr,
)


def test_noise_free_sine_fit():
    x = np.linspace(0, 2 * np.pi, 200)[:, None]
    t = np.sin(x[:, 0])
    eps = 0.01
    model, sol = train_svr(x, t, C=1.0, epsilon=eps)
    rmse = np.sqrt(np.mean((model.decision(x) - t) ** 2))
    assert rmse <= eps + 0.02
    assert kkt_violation(sol, 1.0) <= 1e-3


@given(st.integers(0, 10_000), st.floats(0.1, 10.0), st.floats(0.0, 0.5))
def test_kkt_holds_at_convergence(seed, C, eps):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3))
    z = np.sin(X[:, 0]) + 0.1 * rng.normal(size=40)
    K = gaussian_kernel(X, X, median_bandwidth(X))
    sol = solve_dual(K, z, C, eps, tol=1e-4)
    assert kkt_violation(sol, C) <= 1e-3
    beta = sol.beta
    assert abs(beta.sum()) <= 1e-8 * max(1.0, C)
    assert np.all(sol.alpha >= -1e-12) and np.all(sol.alpha <= C + 1e-12)


def test_lag_layout():
    assert svr_lags(24) == tuple(range(1, 25))
    assert svr_lags(168) == tuple(range(1, 25)) + (168,)
    assert svr_lags(7) == tuple(range(1, 8))
    assert svr_lags(1) == (1,)


def test_rollout_matches_step_by_step_decision():
    rng = np.random.default_rng(0)
    n = 2000
    t = np.arange(n)
    ex = rng.normal(size=(n, 2))
    y = np.sin(2 * np.pi * t / 24) + 0.3 * ex[:, 0] + 0.1 * rng.normal(size=n)
    state = fit_svr(y[:1800], ex[:1800], 24, SvrConfig())
    fc = forecast_svr(state, y[:1800], ex[1800:1900])
    first = max(state.lags)
    z = list((y[1800 - first:1800] - state.y_mean) / state.y_std)
    ez = (ex[1800:1900] - state.x_mean) / state.x_std
    for k in range(100):
        x = np.r_[[z[first + k - lag] for lag in state.lags], ez[k]]
        z.append(float(state.model.decision(x[None])[0]))
    ref = np.array(z[first:]) * state.y_std + state.y_mean
    np.testing.assert_allclose(fc, ref, rtol=1e-9, atol=1e-9)


def test_fit_is_deterministic():
    rng = np.random.default_rng(1)
    y = np.sin(np.arange(500) / 4) + 0.05 * rng.normal(size=500)
    ex = np.zeros((500, 0))
    a = forecast_svr(fit_svr(y, ex, 24), y, np.zeros((10, 0)))
    b = forecast_svr(fit_svr(y, ex, 24), y, np.zeros((10, 0)))
    assert np.array_equal(a, b)
