"""Forecast error metrics."""

from __future__ import annotations

import numpy as np

from ..errors import LengthMismatch


def _pair(y_hat, y) -> tuple[np.ndarray, np.ndarray]:
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if y_hat.size != y.size or y.size == 0:
        raise LengthMismatch(f"forecast length {y_hat.size} vs actual {y.size}")
    return y_hat, y


def rmse(y_hat, y) -> float:
    y_hat, y = _pair(y_hat, y)
    return float(np.sqrt(np.mean((y_hat - y) ** 2)))


def mape(y_hat, y) -> float:
    """Mean absolute relative error; the denominator is floored at 1e-6 * mean|y|."""
    y_hat, y = _pair(y_hat, y)
    floor = 1e-6 * float(np.mean(np.abs(y)))
    denom = np.maximum(np.abs(y), floor)
    if floor == 0.0:
        denom = np.where(denom > 0, denom, 1.0)
    return float(np.mean(np.abs(y_hat - y) / denom))
