"""Multiplicative seasonal ARIMA estimated by Hannan-Rissanen + conditional sum of squares.

Sign convention for the MA part follows the Box-Jenkins form::

    phi(B) PHI(B^s) (1-B)^d (1-B^s)^D y_t = theta(B) THETA(B^s) e_t
    phi(B)   = 1 - phi_1 B - ... - phi_p B^p
    theta(B) = 1 - theta_1 B - ... - theta_q B^q
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from ..errors import NonConvergence

MIN_RESIDUALS = 20


@dataclass(frozen=True)
class SarimaOrder:
    p: int
    d: int
    q: int
    P: int
    D: int
    Q: int
    s: int = 1

    @property
    def n_params(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def ar_span(self) -> int:
        return self.p + self.P * self.s

    @property
    def diff_span(self) -> int:
        return self.d + self.D * self.s

    def min_length(self) -> int:
        """Shortest series leaving MIN_RESIDUALS conditional residuals."""
        return self.diff_span + self.ar_span + MIN_RESIDUALS


@dataclass(frozen=True)
class SarimaConfig:
    max_fit_samples: int = 1200
    max_evals: int = 300
    refine: bool = True


@dataclass(frozen=True)
class SarimaParams:
    order: SarimaOrder
    phi: np.ndarray
    theta: np.ndarray
    sphi: np.ndarray
    stheta: np.ndarray
    sigma2: float
    mean: float = 0.0

    def to_dict(self) -> dict:
        o = self.order
        return {
            "order": [o.p, o.d, o.q, o.P, o.D, o.Q, o.s],
            "phi": self.phi.tolist(), "theta": self.theta.tolist(),
            "sphi": self.sphi.tolist(), "stheta": self.stheta.tolist(),
            "sigma2": self.sigma2, "mean": self.mean,
        }


def difference(y: np.ndarray, d: int, D: int, s: int) -> np.ndarray:
    w = np.asarray(y, dtype=float)
    for _ in range(d):
        w = w[1:] - w[:-1]
    for _ in range(D):
        w = w[s:] - w[:-s]
    return w


def _seasonal_fir(u: np.ndarray, coefs: np.ndarray, s: int) -> np.ndarray:
    v = u.copy()
    for j, c in enumerate(coefs, start=1):
        if j * s < u.size:
            v[j * s:] -= c * u[: -j * s]
    return v


def _seasonal_iir(x: np.ndarray, coefs: np.ndarray, s: int) -> np.ndarray:
    """Solve e_t = x_t + sum_j c_j e_{t-js} from rest, one sub-series per season slot."""
    if coefs.size == 0 or not np.any(coefs):
        return x
    n = x.size
    rows = -(-n // s)
    padded = np.zeros(rows * s)
    padded[:n] = x
    out = lfilter([1.0], np.r_[1.0, -coefs], padded.reshape(rows, s), axis=0)
    return out.reshape(-1)[:n]


def css_residuals(w: np.ndarray, phi, theta, sphi, stheta, s: int) -> np.ndarray:
    """Conditional residuals; the first p + P*s entries are conditioned to zero."""
    t0 = phi.size + sphi.size * s
    u = lfilter(np.r_[1.0, -phi], [1.0], w) if phi.size else w
    v = _seasonal_fir(u, sphi, s) if sphi.size else u.copy()
    v[:t0] = 0.0
    e = lfilter([1.0], np.r_[1.0, -theta], v) if theta.size else v
    return _seasonal_iir(e, stheta, s)


def _split(x: np.ndarray, order: SarimaOrder):
    p, q, P = order.p, order.q, order.P
    return x[:p], x[p:p + q], x[p + q:p + q + P], x[p + q + P:]


def _stabilize(coefs: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Shrink a lag polynomial 1 - sum c_k z^k until all roots lie outside the unit circle."""
    if coefs.size == 0:
        return coefs
    c = coefs.copy()
    for _ in range(200):
        poly = np.zeros(int(lags.max()) + 1)
        poly[0] = 1.0
        poly[lags] = -c
        roots = np.roots(poly[::-1])
        if roots.size == 0 or np.min(np.abs(roots)) > 1.0 + 1e-3:
            return c
        c = c * 0.95 ** (lags / lags.min())
    return np.zeros_like(c)


def _lag_matrix(x: np.ndarray, lags, rows: np.ndarray) -> np.ndarray:
    return np.column_stack([x[rows - k] for k in lags]) if len(lags) else np.empty((rows.size, 0))


def hannan_rissanen(w: np.ndarray, order: SarimaOrder) -> np.ndarray:
    """Two-stage least squares start values (cross-season terms ignored)."""
    p, q, P, Q, s = order.p, order.q, order.P, order.Q, order.s
    n = w.size
    m1 = min(2 * max(p, q) + 4, max(1, n // 10))
    seasons = 0
    if s > 1:
        seasons = max(0, min(max(P, Q) + 1, (n - m1 - 4 * MIN_RESIDUALS) // s))
    long_lags = list(range(1, m1 + 1))
    for j in range(1, seasons + 1):
        long_lags += [j * s + i for i in range(-1, 2) if j * s + i > m1]
    start = max(long_lags)
    rows = np.arange(start, n)
    ehat = np.zeros(n)
    if q or Q:
        A = _lag_matrix(w, long_lags, rows)
        coef, *_ = np.linalg.lstsq(A, w[rows], rcond=None)
        ehat[rows] = w[rows] - A @ coef

    ar_lags = list(range(1, p + 1)) + [j * s for j in range(1, P + 1)]
    ma_lags = list(range(1, q + 1)) + [j * s for j in range(1, Q + 1)]
    span = max(ar_lags + ma_lags + [0])
    rows2 = np.arange(start + span if (q or Q) else span, n)
    if rows2.size < len(ar_lags) + len(ma_lags) + 5:
        rows2 = np.arange(span, n)
    A2 = np.hstack([_lag_matrix(w, ar_lags, rows2), _lag_matrix(-ehat, ma_lags, rows2)])
    coef2, *_ = np.linalg.lstsq(A2, w[rows2], rcond=None)
    phi, sphi = coef2[:p], coef2[p:p + P]
    theta, stheta = coef2[p + P:p + P + q], coef2[p + P + q:]
    phi = _stabilize(phi, np.arange(1, p + 1))
    theta = _stabilize(theta, np.arange(1, q + 1))
    sphi = _stabilize(sphi, np.arange(1, P + 1))
    stheta = _stabilize(stheta, np.arange(1, Q + 1))
    return np.concatenate([phi, theta, sphi, stheta])


def fit_sarima(y, order: SarimaOrder, config: SarimaConfig = SarimaConfig()) -> SarimaParams:
    y = np.asarray(y, dtype=float)
    need = order.min_length()
    if y.size < need:
        raise NonConvergence(f"need {need} samples for {order}, have {y.size}")
    window = min(y.size, max(config.max_fit_samples, need + need // 2))
    y = y[-window:]
    mean = float(y.mean()) if order.d == 0 and order.D == 0 else 0.0
    w = difference(y - mean, order.d, order.D, order.s)
    t0 = order.ar_span
    n_eff = w.size - t0

    def css(x: np.ndarray) -> float:
        phi, theta, sphi, stheta = _split(x, order)
        with np.errstate(all="ignore"):
            e = css_residuals(w, phi, theta, sphi, stheta, order.s)[t0:]
            val = float(e @ e) / n_eff
        return val if np.isfinite(val) else 1e300

    x0 = hannan_rissanen(w, order) if order.n_params else np.empty(0)
    best = x0
    if config.refine and order.n_params:
        res = minimize(css, x0, method="Powell",
                       options={"maxfev": config.max_evals, "xtol": 1e-4, "ftol": 1e-8})
        if np.all(np.isfinite(res.x)) and res.fun <= css(x0):
            best = res.x
    sigma2 = css(best)
    if not np.isfinite(sigma2) or sigma2 >= 1e299:
        raise NonConvergence(f"CSS diverged for {order}")
    phi, theta, sphi, stheta = _split(best, order)
    return SarimaParams(order, phi, theta, sphi, stheta, sigma2, mean)


def _lag_poly(coefs: np.ndarray, step: int) -> np.ndarray:
    poly = np.zeros(coefs.size * step + 1)
    poly[0] = 1.0
    poly[step::step] = -coefs
    return poly


def expanded_polynomials(params: SarimaParams) -> tuple[np.ndarray, np.ndarray]:
    s = params.order.s
    ar = np.convolve(_lag_poly(params.phi, 1), _lag_poly(params.sphi, s))
    ma = np.convolve(_lag_poly(params.theta, 1), _lag_poly(params.stheta, s))
    return ar, ma


def one_step_residuals(params: SarimaParams, y) -> np.ndarray:
    """One-step-ahead prediction errors on ``y`` aligned to its index (NaN where conditioned)."""
    o = params.order
    y = np.asarray(y, dtype=float)
    w = difference(y - params.mean, o.d, o.D, o.s)
    e = css_residuals(w, params.phi, params.theta, params.sphi, params.stheta, o.s)
    out = np.full(y.size, np.nan)
    lead = o.diff_span + o.ar_span
    out[lead:] = e[o.ar_span:]
    return out


def _filter_state(b, a, y_rev: np.ndarray, x_rev=None) -> np.ndarray:
    """Initial ``lfilter`` state from past outputs and inputs, most recent first.

    zi[m] = sum_k b[m+1+k] x[k] - sum_k a[m+1+k] y[k], as correlations in C.
    """
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    M, N = b.size - 1, a.size - 1
    zi = np.zeros(max(M, N))
    if M and x_rev is not None:
        x = np.zeros(M)
        x[:min(M, x_rev.size)] = x_rev[:M]
        zi[:M] += np.correlate(b[1:], x, "full")[M - 1:]
    if N:
        y = np.zeros(N)
        y[:min(N, y_rev.size)] = y_rev[:N]
        zi[:N] -= np.correlate(a[1:], y, "full")[N - 1:]
    return zi


def _continue_filter(b, a, x_future: np.ndarray, y_past: np.ndarray, x_past=None) -> np.ndarray:
    """Run ``lfilter(b, a)`` over ``x_future`` starting from the state left by the past."""
    zi = _filter_state(b, a, y_past[::-1], None if x_past is None else x_past[::-1])
    out, _ = lfilter(b, a, x_future, zi=zi)
    return out


def forecast_sarima(params: SarimaParams, y_hist, steps: int,
                    config: SarimaConfig = SarimaConfig()) -> np.ndarray:
    """Recursive multi-step forecast from the end of ``y_hist`` with zero future shocks."""
    o = params.order
    y_hist = np.asarray(y_hist, dtype=float)
    window = min(y_hist.size, max(config.max_fit_samples, 2 * o.min_length()))
    yh = y_hist[-window:] - params.mean
    w = difference(yh, o.d, o.D, o.s)
    e = css_residuals(w, params.phi, params.theta, params.sphi, params.stheta, o.s)
    ar, ma = expanded_polynomials(params)
    # a(B) w_t = m(B) e_t with future shocks zero: feed the past shocks through m(B)
    pad = max(ar.size, ma.size)
    w_p = np.concatenate([np.zeros(pad), w])
    e_p = np.concatenate([np.zeros(pad), e])
    w_future = _continue_filter(ma, ar, np.zeros(steps), w_p, e_p)

    delta = np.array([1.0])
    for _ in range(o.d):
        delta = np.convolve(delta, [1.0, -1.0])
    for _ in range(o.D):
        delta = np.convolve(delta, _lag_poly(np.array([1.0]), o.s))
    y_p = np.concatenate([np.zeros(delta.size), yh])
    out = _continue_filter([1.0], delta, w_future, y_p) + params.mean
    if not np.all(np.isfinite(out)):
        raise NonConvergence("non-finite SARIMA forecast")
    return out
