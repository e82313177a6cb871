"""The 16 task meta-features: six requirement descriptors plus ten load statistics."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import DegenerateSeries, LagOutOfRange, TooShort
from .series import LFTask

FEATURE_NAMES = (
    "data_length", "n_weather", "granularity", "horizon", "n_customers", "load_type",
    "mean", "max", "min", "std", "kurtosis", "skewness", "fickleness",
    "h_acf", "h_pacf", "periodicity",
)
N_REQUIREMENT_FEATURES = 6


@dataclass(frozen=True)
class FeatureVector:
    data_length: float
    n_weather: float
    granularity: float
    horizon: float
    n_customers: float
    load_type: float
    mean: float
    max: float
    min: float
    std: float
    kurtosis: float
    skewness: float
    fickleness: float
    h_acf: float
    h_pacf: float
    periodicity: float

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, values) -> FeatureVector:
        values = [float(v) for v in values]
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(values)}")
        return cls(*values)


assert tuple(f.name for f in fields(FeatureVector)) == FEATURE_NAMES


def _centered(y) -> tuple[np.ndarray, float]:
    y = np.asarray(y, dtype=float)
    d = y - y.mean()
    sigma = np.sqrt(np.mean(d * d))
    return d, sigma


def _check_spread(y: np.ndarray, d: np.ndarray, sigma: float) -> None:
    if sigma == 0.0 or sigma <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateSeries("series has zero standard deviation")


def kurtosis(y) -> float:
    """Standardized fourth central moment (3 for a Gaussian)."""
    y = np.asarray(y, dtype=float)
    d, sigma = _centered(y)
    _check_spread(y, d, sigma)
    z = d / sigma
    return float(np.mean(z ** 4))


def skewness(y) -> float:
    y = np.asarray(y, dtype=float)
    d, sigma = _centered(y)
    _check_spread(y, d, sigma)
    z = d / sigma
    return float(np.mean(z ** 3))


def fickleness(y) -> float:
    """Share of consecutive sample pairs whose signs about the mean agree, over N."""
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise TooShort("fickleness needs at least two samples")
    s = np.sign(y - y.mean())
    return float(np.count_nonzero(s[1:] == s[:-1]) / y.size)


def acf_values(y, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags 0..max_lag.

    Lag products are averaged over the N-k available pairs and divided by the
    full-sample variance, so a pure sinusoid scores 1 at its period.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    d = y - y.mean()
    var = float(d @ d) / n
    if var == 0.0:
        raise DegenerateSeries("autocorrelation of a constant series")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(d[:-k] @ d[k:]) / (n - k) / var
    return out


def _check_lag(n: int, lag: int, lowest: int) -> None:
    if lag < lowest or lag > n // 2:
        raise LagOutOfRange(f"lag {lag} outside [{lowest}, {n // 2}]")


def acf(y, lag: int) -> float:
    y = np.asarray(y, dtype=float)
    _check_lag(y.size, lag, 0)
    return float(acf_values(y, lag)[lag])


def pacf_from_acf(r: np.ndarray) -> np.ndarray:
    """Durbin-Levinson recursion; entry k is the lag-k partial autocorrelation."""
    max_lag = r.size - 1
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if max_lag == 0:
        return out
    phi = np.array([r[1]])
    out[1] = r[1]
    v = 1.0 - r[1] ** 2
    for k in range(2, max_lag + 1):
        if v <= 0:
            break
        a = (r[k] - phi @ r[k - 1:0:-1]) / v
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1.0 - a * a
        out[k] = a
    return out


def pacf(y, lag: int) -> float:
    y = np.asarray(y, dtype=float)
    _check_lag(y.size, lag, 0)
    return float(pacf_from_acf(acf_values(y, lag))[lag])


def _lag_bound(n: int, expected_period: int) -> int:
    if n < 8:
        raise TooShort("need at least 8 samples")
    return max(1, min(n // 2, 2 * int(expected_period)))


def h_acf(y, expected_period: int = 24) -> float:
    """Largest |ACF| over lags 1..min(N/2, 2*expected_period)."""
    y = np.asarray(y, dtype=float)
    r = acf_values(y, _lag_bound(y.size, expected_period))
    return float(np.max(np.abs(r[1:])))


def h_pacf(y, expected_period: int = 24) -> float:
    y = np.asarray(y, dtype=float)
    r = acf_values(y, _lag_bound(y.size, expected_period))
    return float(min(1.0, np.max(np.abs(pacf_from_acf(r)[1:]))))


def candidate_periods(granularity_hours: float) -> tuple[int, ...]:
    if granularity_hours >= 24:
        return (7, 30)
    return tuple(int(round(h / granularity_hours)) for h in (24, 168))


def periodicity(y, granularity_hours: float, threshold: float = 0.2) -> int:
    """Best-correlated typical period, else the highest ACF peak at lag >= 2.

    Candidates longer than a third of the series are not considered.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    cands = [c for c in candidate_periods(granularity_hours) if 3 * c <= n]
    max_lag = n // 3
    if max_lag < 2:
        raise TooShort("series too short to estimate a period")
    d = y - y.mean()
    denom = float(d @ d)
    if denom == 0.0:
        raise DegenerateSeries("autocorrelation of a constant series")
    if cands:
        vals = [float(d[:-c] @ d[c:]) / denom for c in cands]
        best = int(np.argmax(vals))
        if vals[best] > threshold:
            return cands[best]
    # fallback: FFT autocorrelation is ample for locating a peak
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(d, nfft)
    r = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1] / denom
    inner = r[2:max_lag]
    peaks = np.nonzero((inner >= r[1:max_lag - 1]) & (inner >= r[3:max_lag + 1]))[0] + 2
    if peaks.size == 0:
        return 1
    return int(peaks[np.argmax(r[peaks])])


def load_statistics(y, granularity_hours: float) -> dict[str, float]:
    y = np.asarray(y, dtype=float)
    d, sigma = _centered(y)
    _check_spread(y, d, sigma)
    period = periodicity(y, granularity_hours)
    r = acf_values(y, _lag_bound(y.size, period))
    return {
        "mean": float(y.mean()),
        "max": float(y.max()),
        "min": float(y.min()),
        "std": float(sigma),
        "kurtosis": kurtosis(y),
        "skewness": skewness(y),
        "fickleness": fickleness(y),
        "h_acf": float(np.max(np.abs(r[1:]))),
        "h_pacf": float(min(1.0, np.max(np.abs(pacf_from_acf(r)[1:])))),
        "periodicity": float(period),
    }


def extract_features(task: LFTask) -> FeatureVector:
    req = task.requirements
    stats = load_statistics(task.y, req.granularity_hours)
    return FeatureVector(
        data_length=float(req.history_days),
        n_weather=float(req.n_weather),
        granularity=float(req.granularity_hours),
        horizon=float(req.horizon_hours),
        n_customers=float(req.n_customers),
        load_type=float(req.load_type),
        **stats,
    )


def feature_matrix(tasks) -> np.ndarray:
    return np.vstack([extract_features(t).to_array() for t in tasks])
