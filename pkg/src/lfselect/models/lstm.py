"""Single-layer LSTM regressor with hand-written BPTT and Adam."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonConvergence


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_params(n_input: int, n_hidden: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform init in +-1/sqrt(fan_in); gate order is input, forget, output, cell."""
    fan_in = n_input + n_hidden
    lim = 1.0 / np.sqrt(fan_in)
    lim_head = 1.0 / np.sqrt(n_hidden)
    return {
        "W": rng.uniform(-lim, lim, size=(fan_in, 4 * n_hidden)),
        "b": np.zeros(4 * n_hidden),
        "V": rng.uniform(-lim_head, lim_head, size=n_hidden),
        "c": np.zeros(1),
    }


def forward(params: dict, X: np.ndarray, h0=None, c0=None):
    """Run the network over ``X`` of shape (T, B, I).

    Returns per-step predictions (T, B), the final (h, c) and a cache for
    :func:`backward`.
    """
    W, b, V = params["W"], params["b"], params["V"]
    T, B, n_in = X.shape
    H = V.shape[0]
    Wx, Wh = W[:n_in], W[n_in:]
    zx = (X.reshape(T * B, n_in) @ Wx + b).reshape(T, B, 4 * H)
    h = np.zeros((B, H)) if h0 is None else h0
    c = np.zeros((B, H)) if c0 is None else c0

    hs = np.empty((T + 1, B, H))
    cs = np.empty((T + 1, B, H))
    gates = np.empty((T, B, 4 * H))
    tcs = np.empty((T, B, H))
    hs[0], cs[0] = h, c
    for t in range(T):
        z = zx[t] + h @ Wh
        act = gates[t]
        act[:, : 3 * H] = _sigmoid(z[:, : 3 * H])
        act[:, 3 * H:] = np.tanh(z[:, 3 * H:])
        c = act[:, H: 2 * H] * c + act[:, :H] * act[:, 3 * H:]
        tc = np.tanh(c)
        h = act[:, 2 * H: 3 * H] * tc
        hs[t + 1], cs[t + 1], tcs[t] = h, c, tc
    yhat = hs[1:] @ V + params["c"][0]
    return yhat, (h, c), (X, hs, cs, gates, tcs)


def backward(params: dict, cache, dyhat: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss given ``dyhat`` = dL/dyhat of shape (T, B)."""
    X, hs, cs, gates, tcs = cache
    W, V = params["W"], params["V"]
    T, B, n_in = X.shape
    H = V.shape[0]
    Wh_T = W[n_in:].T

    dV = np.einsum("tbh,tb->h", hs[1:], dyhat)
    dc_out = np.array([dyhat.sum()])
    dh_from_out = dyhat[:, :, None] * V
    dz_all = np.empty((T, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        act = gates[t]
        i, f, o, g = act[:, :H], act[:, H: 2 * H], act[:, 2 * H: 3 * H], act[:, 3 * H:]
        dh = dh_from_out[t] + dh_next
        tc = tcs[t]
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = dz_all[t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H: 2 * H] = dc * cs[t] * f * (1.0 - f)
        dz[:, 2 * H: 3 * H] = dh * tc * o * (1.0 - o)
        dz[:, 3 * H:] = dc * i * (1.0 - g * g)
        dc_next = dc * f
        dh_next = dz @ Wh_T
    dz_flat = dz_all.reshape(T * B, 4 * H)
    inputs = np.concatenate([X, hs[:-1]], axis=2).reshape(T * B, n_in + H)
    return {"W": inputs.T @ dz_flat, "b": dz_flat.sum(axis=0), "V": dV, "c": dc_out}


def mse_loss_and_grad(params: dict, X: np.ndarray, Y: np.ndarray):
    yhat, _, cache = forward(params, X)
    err = yhat - Y
    loss = float(np.mean(err * err))
    grads = backward(params, cache, 2.0 * err / err.size)
    return loss, grads


class Adam:
    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        a = self.lr * np.sqrt(1 - self.beta2 ** self.t) / (1 - self.beta1 ** self.t)
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= a * self.m[k] / (np.sqrt(self.v[k]) + self.eps)


@dataclass(frozen=True)
class LstmConfig:
    epochs: int = 20
    learning_rate: float = 1e-2
    window_cap: int = 24
    max_windows: int = 16
    batch_size: int = 16
    clip_norm: float = 5.0


@dataclass(frozen=True)
class LstmState:
    hidden_units: int
    window: int
    params: dict
    x_mean: np.ndarray
    x_std: np.ndarray
    seed: int

    def to_dict(self) -> dict:
        return {
            "hidden_units": self.hidden_units,
            "window": self.window,
            "params": {k: v.tolist() for k, v in self.params.items()},
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "seed": self.seed,
        }


def _design(y: np.ndarray, exog: np.ndarray) -> np.ndarray:
    """Row t holds (y[t-1], exog[t]); the target for row t is y[t]."""
    prev = np.concatenate([[y[0]], y[:-1]])
    return np.column_stack([prev, exog]) if exog.shape[1] else prev[:, None]


def fit_lstm(y: np.ndarray, exog: np.ndarray, hidden_units: int, window: int,
             seed: int, config: LstmConfig = LstmConfig()) -> LstmState:
    """Train on the most recent non-overlapping windows of the training data."""
    n = y.size
    n_windows = min(config.max_windows, (n - 1) // window)
    if n_windows < 1:
        raise NonConvergence("not enough data for one training window")
    rng = np.random.default_rng(seed)

    inputs = _design(y, exog)
    x_mean = inputs.mean(axis=0)
    x_std = inputs.std(axis=0)
    x_std[x_std == 0] = 1.0
    z_in = (inputs - x_mean) / x_std
    z_y = (y - x_mean[0]) / x_std[0]

    ends = n - window * np.arange(n_windows)[::-1]
    idx = ends[None, :] - window + np.arange(window)[:, None]  # (T, n_windows)
    X_all, Y_all = z_in[idx], z_y[idx]

    params = init_params(inputs.shape[1], hidden_units, rng)
    opt = Adam(params, lr=config.learning_rate)
    bs = max(1, config.batch_size)
    for _ in range(config.epochs):
        order = rng.permutation(n_windows)
        for s in range(0, n_windows, bs):
            cols = order[s: s + bs]
            _, grads = mse_loss_and_grad(params, X_all[:, cols], Y_all[:, cols])
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if not np.isfinite(norm):
                raise NonConvergence("non-finite LSTM gradient")
            if norm > config.clip_norm:
                for g in grads.values():
                    g *= config.clip_norm / norm
            opt.step(params, grads)
    return LstmState(hidden_units, window, params, x_mean, x_std, int(seed))


def forecast_lstm(state: LstmState, y_hist: np.ndarray, exog_hist: np.ndarray,
                  exog_future: np.ndarray) -> np.ndarray:
    """Warm up on the last window of history, then roll forward on own predictions."""
    return forecast_lstm_batch(state, y_hist, exog_hist, [y_hist.size], exog_future.shape[0],
                               np.asarray(exog_future)[None])[0]


def forecast_lstm_batch(state: LstmState, y: np.ndarray, exog: np.ndarray, origins, K: int,
                        exog_future: np.ndarray | None = None) -> np.ndarray:
    """Rollouts of length ``K`` from several origins at once; origin ``s`` sees only ``y[:s]``.

    ``exog_future`` (B, K, n_exog) defaults to ``exog[s:s+K]`` per origin.
    Returns (B, K).
    """
    origins = [int(s) for s in origins]
    B = len(origins)
    W = min(state.window, min(origins) - 1)
    if W < 1:
        raise NonConvergence("history too short to warm up the LSTM")
    p = state.params
    Wt, b, V, c0 = p["W"], p["b"], p["V"], p["c"][0]
    H = V.size
    n_in = state.x_mean.size
    z = np.empty((W, B, n_in))
    fut = np.empty((B, K, n_in - 1))
    for j, s in enumerate(origins):
        z[:, j] = (_design(y[:s], exog[:s])[-W:] - state.x_mean) / state.x_std
        fut[j] = exog[s:s + K] if exog_future is None else exog_future[j]
    _, (h, c), _ = forward(p, z)
    w_prev, Wh = Wt[0], Wt[n_in:]
    if n_in > 1:
        base = ((fut - state.x_mean[1:]) / state.x_std[1:]) @ Wt[1:n_in] + b  # (B, K, 4H)
    else:
        base = np.broadcast_to(b, (B, K, 4 * H))
    out = np.empty((B, K))
    prev = (np.array([y[s - 1] for s in origins]) - state.x_mean[0]) / state.x_std[0]
    for k in range(K):
        zg = base[:, k] + prev[:, None] * w_prev + h @ Wh
        sg = 0.5 * (1.0 + np.tanh(0.5 * zg[:, : 3 * H]))
        c = sg[:, H: 2 * H] * c + sg[:, :H] * np.tanh(zg[:, 3 * H:])
        h = sg[:, 2 * H:] * np.tanh(c)
        prev = h @ V + c0
        out[:, k] = prev
    return out * state.x_std[0] + state.x_mean[0]
