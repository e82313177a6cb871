from __future__ import annotations

import numpy as np
import pytest

from lfselect.models.lstm import (
    LstmConfig,
    _design,
    fit_lstm,
    forecast_lstm,
    forward,
    init_params,
    mse_loss_and_grad,
)


def numeric_grad(params, X, Y, key, idx, h=1e-5):
    p = {k: v.copy() for k, v in params.items()}
    p[key][idx] += h
    up, _ = mse_loss_and_grad(p, X, Y)
    p[key][idx] -= 2 * h
    dn, _ = mse_loss_and_grad(p, X, Y)
    return (up - dn) / (2 * h)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    params = init_params(3, 5, rng)
    params["b"] = rng.normal(scale=0.1, size=params["b"].shape)
    params["c"] = np.array([0.2])
    X = rng.normal(size=(6, 4, 3))
    Y = rng.normal(size=(6, 4))
    _, grads = mse_loss_and_grad(params, X, Y)
    worst = 0.0
    for key, g in grads.items():
        for idx in np.ndindex(g.shape):
            num = numeric_grad(params, X, Y, key, idx)
            worst = max(worst, abs(num - g[idx]) / max(1e-8, abs(num) + abs(g[idx])))
    assert worst < 1e-4


def test_training_is_bit_reproducible():
    rng = np.random.default_rng(1)
    y = np.sin(np.arange(600) / 3) + 0.1 * rng.normal(size=600)
    ex = rng.normal(size=(600, 1))
    cfg = LstmConfig(epochs=3)
    a = fit_lstm(y, ex, 8, 12, seed=42, config=cfg)
    b = fit_lstm(y, ex, 8, 12, seed=42, config=cfg)
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])
    c = fit_lstm(y, ex, 8, 12, seed=43, config=cfg)
    assert not np.array_equal(a.params["W"], c.params["W"])


def test_training_reduces_loss():
    t = np.arange(800)
    y = np.sin(2 * np.pi * t / 24)
    ex = np.zeros((800, 0))
    untrained = fit_lstm(y, ex, 16, 24, seed=0, config=LstmConfig(epochs=0))
    trained = fit_lstm(y, ex, 16, 24, seed=0, config=LstmConfig(epochs=40))
    err = []
    for st in (untrained, trained):
        fc = forecast_lstm(st, y[:776], ex[:776], ex[776:])
        err.append(np.sqrt(np.mean((fc - y[776:]) ** 2)))
    assert err[1] < err[0]


def test_rollout_matches_full_forward():
    rng = np.random.default_rng(2)
    n = 400
    y = np.sin(np.arange(n) / 4) + 0.1 * rng.normal(size=n)
    ex = rng.normal(size=(n, 2))
    st = fit_lstm(y[:380], ex[:380], 6, 16, seed=0, config=LstmConfig(epochs=2))
    fc = forecast_lstm(st, y[:380], ex[:380], ex[380:390])
    W = st.window
    z = (_design(y[:380], ex[:380])[-W:] - st.x_mean) / st.x_std
    _, (h, c), _ = forward(st.params, z[:, None, :])
    prev, ref = y[379], []
    for k in range(10):
        xi = (np.r_[prev, ex[380 + k]] - st.x_mean) / st.x_std
        yh, (h, c), _ = forward(st.params, xi[None, None, :], h, c)
        prev = yh[0, 0] * st.x_std[0] + st.x_mean[0]
        ref.append(prev)
    np.testing.assert_allclose(fc, ref, rtol=1e-10, atol=1e-12)
