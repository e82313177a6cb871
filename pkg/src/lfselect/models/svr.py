"""Epsilon-insensitive support vector regression with a Gaussian kernel.

The dual is solved with sequential minimal optimization over the stacked
(alpha, alpha*) vector using second-order working-set selection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonConvergence

TAU = 1e-12


def median_bandwidth(X: np.ndarray) -> float:
    """Median pairwise Euclidean distance, floored so the kernel stays finite."""
    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    iu = np.triu_indices(X.shape[0], k=1)
    med = float(np.median(np.sqrt(d2[iu]))) if iu[0].size else 1.0
    return med if med > 1e-12 else 1.0


def gaussian_kernel(A: np.ndarray, B: np.ndarray, bandwidth: float) -> np.ndarray:
    d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-np.maximum(d2, 0.0) / (2.0 * bandwidth * bandwidth))


@dataclass(frozen=True)
class SvrSolution:
    alpha: np.ndarray  # length 2n: alpha then alpha*
    rho: float
    gradient: np.ndarray
    iterations: int

    @property
    def beta(self) -> np.ndarray:
        n = self.alpha.size // 2
        return self.alpha[:n] - self.alpha[n:]


def solve_dual(K: np.ndarray, z: np.ndarray, C: float, epsilon: float,
               tol: float = 1e-4, max_iter: int = 100_000) -> SvrSolution:
    n = z.size
    y = np.r_[np.ones(n), -np.ones(n)]
    p = np.r_[epsilon - z, epsilon + z]
    alpha = np.zeros(2 * n)
    G = p.copy()
    kd = np.diag(K).copy()
    idx = np.arange(2 * n) % n

    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        minus_yg = -y * G
        if not up.any() or not low.any():
            break
        cand = np.where(up, minus_yg, -np.inf)
        i = int(np.argmax(cand))
        g_max = cand[i]
        g_min = float(np.min(minus_yg[low]))
        if g_max - g_min < tol:
            break
        ki = K[idx[i]][idx]
        b = g_max - minus_yg
        a = kd[idx[i]] + kd[idx] - 2.0 * ki
        a = np.where(a > 0, a, TAU)
        obj = np.where(low & (b > 0), -(b * b) / a, np.inf)
        j = int(np.argmin(obj))

        ai, aj = alpha[i], alpha[j]
        kij = K[idx[i], idx[j]]
        if y[i] != y[j]:
            quad = kd[idx[i]] + kd[idx[j]] + 2.0 * (y[i] * y[j] * kij)
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = kd[idx[i]] + kd[idx[j]] - 2.0 * (y[i] * y[j] * kij)
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        qi = y[i] * y * ki
        qj = y[j] * y * K[idx[j]][idx]
        G += qi * (ni - ai) + qj * (nj - aj)
        alpha[i], alpha[j] = ni, nj
        it += 1
    else:
        raise NonConvergence("SMO iteration limit reached")

    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(np.mean((y * G)[free]))
    else:
        yg = y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        # bound variables only: rho may be any value in [max over low of yG, min over up of yG]
        lb = float(np.max(yg[low])) if low.any() else float(np.min(yg))
        ub = float(np.min(yg[up])) if up.any() else float(np.max(yg))
        rho = 0.5 * (lb + ub)
    return SvrSolution(alpha, rho, G, it)


def kkt_violation(sol: SvrSolution, C: float) -> float:
    """Largest violation of the dual optimality conditions given the bias rho."""
    n = sol.alpha.size // 2
    y = np.r_[np.ones(n), -np.ones(n)]
    r = sol.gradient - sol.rho * y  # stationarity residual
    a = sol.alpha
    box = max(0.0, float(-a.min()), float(a.max() - C))
    at_lo = a <= 0
    at_hi = a >= C
    free = ~(at_lo | at_hi)
    viol = np.zeros_like(a)
    viol[at_lo] = np.maximum(0.0, -r[at_lo])
    viol[at_hi] = np.maximum(0.0, r[at_hi])
    viol[free] = np.abs(r[free])
    return max(box, float(viol.max()))


@dataclass(frozen=True)
class SvrConfig:
    C: float = 1.0
    epsilon: float = 0.01  # in units of the training-target std
    max_lags: int = 24
    max_train_rows: int = 300
    tol: float = 1e-4


@dataclass(frozen=True)
class SvrModel:
    support: np.ndarray
    beta: np.ndarray
    rho: float
    bandwidth: float
    C: float
    epsilon: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        return gaussian_kernel(np.atleast_2d(X), self.support, self.bandwidth) @ self.beta - self.rho


def train_svr(X: np.ndarray, t: np.ndarray, C: float = 1.0, epsilon: float = 0.01,
              bandwidth: float | None = None, tol: float = 1e-4) -> tuple[SvrModel, SvrSolution]:
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    bw = median_bandwidth(X) if bandwidth is None else float(bandwidth)
    K = gaussian_kernel(X, X, bw)
    sol = solve_dual(K, t, C, epsilon, tol=tol)
    beta = sol.beta
    keep = np.abs(beta) > 0
    model = SvrModel(X[keep].copy(), beta[keep].copy(), sol.rho, bw, C, epsilon)
    return model, sol


@dataclass(frozen=True)
class SvrState:
    model: SvrModel
    lags: tuple[int, ...]
    y_mean: float
    y_std: float
    x_mean: np.ndarray
    x_std: np.ndarray

    def to_dict(self) -> dict:
        m = self.model
        return {
            "C": m.C, "epsilon": m.epsilon, "bandwidth": m.bandwidth, "rho": m.rho,
            "support": m.support.tolist(), "beta": m.beta.tolist(), "lags": list(self.lags),
            "y_mean": self.y_mean, "y_std": self.y_std,
            "x_mean": self.x_mean.tolist(), "x_std": self.x_std.tolist(),
        }


def svr_lags(period: int, config: SvrConfig = SvrConfig()) -> tuple[int, ...]:
    lags = list(range(1, max(1, min(period, config.max_lags)) + 1))
    if period > lags[-1]:
        lags.append(int(period))
    return tuple(lags)


def _rows(z: np.ndarray, exog: np.ndarray, lags: tuple[int, ...], targets: np.ndarray) -> np.ndarray:
    cols = [z[targets - k] for k in lags]
    X = np.column_stack(cols)
    if exog.shape[1]:
        X = np.hstack([X, exog[targets]])
    return X


def fit_svr(y: np.ndarray, exog: np.ndarray, period: int,
            config: SvrConfig = SvrConfig()) -> SvrState:
    lags = svr_lags(period, config)
    n = y.size
    first = max(lags)
    if n - first < 30:
        raise NonConvergence("too few rows for SVR")
    y_mean, y_std = float(y.mean()), float(y.std())
    y_std = y_std if y_std > 0 else 1.0
    z = (y - y_mean) / y_std
    x_mean = exog.mean(axis=0) if exog.shape[1] else np.zeros(0)
    x_std = exog.std(axis=0) if exog.shape[1] else np.zeros(0)
    x_std = np.where(x_std > 0, x_std, 1.0)
    ez = (exog - x_mean) / x_std if exog.shape[1] else exog
    targets = np.arange(max(first, n - config.max_train_rows), n)
    X = _rows(z, ez, lags, targets)
    model, _ = train_svr(X, z[targets], config.C, config.epsilon, tol=config.tol)
    return SvrState(model, lags, y_mean, y_std, x_mean, x_std)


def forecast_svr(state: SvrState, y_hist: np.ndarray, exog_future: np.ndarray) -> np.ndarray:
    """Recursive rollout: each prediction becomes a lag input for the next step."""
    out = forecast_svr_batch(state, y_hist, None, [y_hist.size], exog_future.shape[0],
                             np.asarray(exog_future)[None])[0]
    if not np.all(np.isfinite(out)):
        raise NonConvergence("non-finite SVR forecast")
    return out


def forecast_svr_batch(state: SvrState, y: np.ndarray, exog, origins, K: int,
                       exog_future: np.ndarray | None = None) -> np.ndarray:
    """Rollouts of length ``K`` from several origins; origin ``s`` sees only ``y[:s]``.

    ``exog_future`` (B, K, n_exog) defaults to ``exog[s:s+K]`` per origin.
    Returns (B, K); rows may hold non-finite values.
    """
    origins = [int(s) for s in origins]
    B = len(origins)
    first = max(state.lags)
    lags = np.array(state.lags)
    m = state.model
    S = m.support
    n_lag = lags.size
    n_ex = S.shape[1] - n_lag
    z = np.zeros((B, first + K))
    fut = np.empty((B, K, n_ex))
    for j, s in enumerate(origins):
        if s < first:
            raise NonConvergence("history shorter than the largest SVR lag")
        z[j, :first] = (y[s - first:s] - state.y_mean) / state.y_std
        fut[j] = exog[s:s + K] if exog_future is None else exog_future[j]
    # squared distance = |s|^2 + |x|^2 - 2 s.x, with the weather part of s.x precomputed
    s_norm = np.sum(S * S, axis=1)
    S_lag_T = S[:, :n_lag].T
    if n_ex:
        ez = (fut - state.x_mean) / state.x_std
        ex_dot = ez @ S[:, n_lag:].T  # (B, K, n_sv)
        ex_norm = np.sum(ez * ez, axis=2)
    else:
        ex_dot = np.zeros((B, K, S.shape[0]))
        ex_norm = np.zeros((B, K))
    inv = 1.0 / (2.0 * m.bandwidth * m.bandwidth)
    for k in range(K):
        x = z[:, first + k - lags]
        d2 = s_norm + (np.sum(x * x, axis=1) + ex_norm[:, k])[:, None] - 2.0 * (x @ S_lag_T + ex_dot[:, k])
        z[:, first + k] = np.exp(-np.maximum(d2, 0.0) * inv) @ m.beta - m.rho
    return z[:, first:] * state.y_std + state.y_mean
