"""The ten candidate forecasters behind one fit/predict contract."""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..errors import DegenerateSeries, Infeasible, LFSelectError, NonConvergence, TooShort
from ..series import LFTask, SplitPair, samples_per_day, split_positions
from .lstm import LstmConfig, fit_lstm, forecast_lstm, forecast_lstm_batch
from .metrics import mape, rmse
from .sarima import SarimaConfig, SarimaOrder, fit_sarima, forecast_sarima
from .similar_day import SdParams, forecast_sd
from .svr import SvrConfig, fit_svr, forecast_svr, forecast_svr_batch, svr_lags


class ModelId(IntEnum):
    SARIMA_211 = 1
    SARIMA_313 = 2
    SARIMA_412 = 3
    SARIMA_414 = 4
    SARIMA_512 = 5
    SARIMA_515 = 6
    LSTM_125 = 7
    LSTM_200 = 8
    SVR = 9
    SD = 10


N_MODELS = len(ModelId)
MODEL_IDS = tuple(ModelId)
MODEL_NAMES = (
    "SARIMA(2,1,1)", "SARIMA(3,1,3)", "SARIMA(4,1,2)", "SARIMA(4,1,4)",
    "SARIMA(5,1,2)", "SARIMA(5,1,5)", "LSTM(125)", "LSTM(200)", "SVR", "SD",
)
SARIMA_PQ = {
    ModelId.SARIMA_211: (2, 1), ModelId.SARIMA_313: (3, 3), ModelId.SARIMA_412: (4, 2),
    ModelId.SARIMA_414: (4, 4), ModelId.SARIMA_512: (5, 2), ModelId.SARIMA_515: (5, 5),
}
LSTM_UNITS = {ModelId.LSTM_125: 125, ModelId.LSTM_200: 200}
SVR_MIN_ROWS = 30
LSTM_MIN_WINDOWS = 10
LSTM_MIN_WINDOW = 4


def model_name(model_id: int) -> str:
    return MODEL_NAMES[int(model_id) - 1]


@dataclass(frozen=True)
class ZooConfig:
    sarima: SarimaConfig = field(default_factory=SarimaConfig)
    lstm: LstmConfig = field(default_factory=LstmConfig)
    svr: SvrConfig = field(default_factory=SvrConfig)
    sd: SdParams = field(default_factory=SdParams)


DEFAULT_ZOO = ZooConfig()


def sarima_order(model_id: int, period: int) -> SarimaOrder:
    """Same (p, q) for the trend and seasonal parts, d = D = 1; non-seasonal when period < 2."""
    p, q = SARIMA_PQ[ModelId(model_id)]
    if period < 2:
        return SarimaOrder(p, 1, q, 0, 0, 0, 1)
    return SarimaOrder(p, 1, q, p, 1, q, int(period))


def lstm_window(period: int, config: LstmConfig) -> int:
    return int(min(max(period, LSTM_MIN_WINDOW), config.window_cap))


def _safe_period(task: LFTask) -> int | None:
    try:
        return task.period
    except (DegenerateSeries, TooShort):
        return None


def min_train_length(model_id: int, task: LFTask, config: ZooConfig = DEFAULT_ZOO) -> int | None:
    """Smallest training length the model accepts on this task (None: never feasible)."""
    mid = ModelId(model_id)
    spd = samples_per_day(task.requirements.granularity_hours)
    if mid == ModelId.SD:
        return 2 * spd
    period = _safe_period(task)
    if period is None:
        return None
    if mid in SARIMA_PQ:
        o = sarima_order(mid, period)
        return max(3 * o.s + o.p + o.q + 20, o.min_length())
    if mid in LSTM_UNITS:
        return LSTM_MIN_WINDOWS * lstm_window(period, config.lstm)
    return max(svr_lags(period, config.svr)) + SVR_MIN_ROWS


def feasible(model_id: int, task: LFTask, config: ZooConfig = DEFAULT_ZOO) -> bool:
    """Minimum-data rule evaluated on the shortest training range any split can leave."""
    need = min_train_length(model_id, task, config)
    if need is None:
        return False
    try:
        lo, _ = split_positions(len(task), task.horizon)
    except TooShort:
        return False
    return lo >= need


def feasibility_mask(task: LFTask, config: ZooConfig = DEFAULT_ZOO) -> np.ndarray:
    return np.array([feasible(m, task, config) for m in MODEL_IDS])


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from ints and strings."""
    words = [zlib.crc32(p.encode()) if isinstance(p, str) else int(p) & 0xFFFFFFFF for p in parts]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


@dataclass(frozen=True)
class FittedModel:
    model_id: ModelId
    state: object
    fit_end: int
    fit_time: float


@dataclass(frozen=True)
class ForecastResult:
    model_id: ModelId
    y_hat: np.ndarray | None
    fit_time: float
    feasible: bool

    @property
    def ok(self) -> bool:
        return self.feasible and self.y_hat is not None


def fit(model_id: int, task: LFTask, split: SplitPair, seed: int,
        config: ZooConfig = DEFAULT_ZOO, fit_end: int | None = None) -> FittedModel:
    """Fit on ``[0, fit_end)``; ``fit_end`` defaults to the split's test start and may not exceed it."""
    mid = ModelId(model_id)
    if not feasible(mid, task, config):
        raise Infeasible(f"{model_name(mid)} infeasible on task {task.id}")
    end = split.test_start if fit_end is None else int(fit_end)
    if end > split.test_start:
        raise ValueError("fit_end lies inside the test range")
    y, ex = task.y[:end], task.exog[:end]
    t0 = time.perf_counter()
    try:
        with np.errstate(all="ignore"):
            if mid in SARIMA_PQ:
                state = fit_sarima(y, sarima_order(mid, task.period), config.sarima)
            elif mid in LSTM_UNITS:
                state = fit_lstm(y, ex, LSTM_UNITS[mid], lstm_window(task.period, config.lstm),
                                 seed, config.lstm)
            elif mid == ModelId.SVR:
                state = fit_svr(y, ex, task.period, config.svr)
            else:
                state = None  # similar-day has nothing to estimate
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise NonConvergence(f"{model_name(mid)}: {exc}") from exc
    return FittedModel(mid, state, end, time.perf_counter() - t0)


def predict(fitted: FittedModel, task: LFTask, split: SplitPair,
            config: ZooConfig = DEFAULT_ZOO) -> np.ndarray:
    """Forecast the test range from the split origin; history up to the origin is used as state."""
    mid = fitted.model_id
    s, k = split.test_start, split.horizon
    y_hist, ex_hist = task.y[:s], task.exog[:s]
    ex_fut = task.exog[s:s + k]
    with np.errstate(all="ignore"):
        if mid in SARIMA_PQ:
            out = forecast_sarima(fitted.state, y_hist, k, config.sarima)
        elif mid in LSTM_UNITS:
            out = forecast_lstm(fitted.state, y_hist, ex_hist, ex_fut)
        elif mid == ModelId.SVR:
            out = forecast_svr(fitted.state, y_hist, ex_fut)
        else:
            spd = samples_per_day(task.requirements.granularity_hours)
            # future load is masked so only history can be copied
            out, _ = forecast_sd(np.r_[y_hist, np.zeros(k)], task.exog[:s + k], s, k, spd, config.sd)
    out = np.asarray(out, dtype=float)
    if out.shape != (k,) or not np.all(np.isfinite(out)):
        raise NonConvergence(f"{model_name(mid)} produced an invalid forecast")
    return out


def predict_many(fitted: FittedModel, task: LFTask, splits, config: ZooConfig = DEFAULT_ZOO) -> list:
    """``predict`` at several origins sharing one fit; failures come back as None.

    LSTM rollouts run as one batch, other models one origin at a time.
    """
    splits = list(splits)
    batched = {ModelId.LSTM_125: forecast_lstm_batch, ModelId.LSTM_200: forecast_lstm_batch,
               ModelId.SVR: forecast_svr_batch}
    if fitted.model_id in batched and len(splits) > 1:
        k = splits[0].horizon
        try:
            with np.errstate(all="ignore"):
                Y = batched[fitted.model_id](fitted.state, task.y, task.exog,
                                             [sp.test_start for sp in splits], k)
        except (LFSelectError, np.linalg.LinAlgError):
            return [None] * len(splits)
        return [row if np.all(np.isfinite(row)) else None for row in Y]
    out = []
    for sp in splits:
        try:
            out.append(predict(fitted, task, sp, config))
        except (LFSelectError, np.linalg.LinAlgError):
            out.append(None)
    return out


def forecast(model_id: int, task: LFTask, split: SplitPair, seed: int,
             config: ZooConfig = DEFAULT_ZOO, fit_end: int | None = None) -> ForecastResult:
    """Fit then predict, folding infeasibility and numerical failure into the result."""
    mid = ModelId(model_id)
    if not feasible(mid, task, config):
        return ForecastResult(mid, None, 0.0, False)
    try:
        fm = fit(mid, task, split, seed, config, fit_end)
        return ForecastResult(mid, predict(fm, task, split, config), fm.fit_time, True)
    except (LFSelectError, np.linalg.LinAlgError):
        return ForecastResult(mid, None, 0.0, True)


@dataclass(frozen=True)
class ErrorRow:
    rmse: np.ndarray
    mape: np.ndarray
    fit_time: np.ndarray

    @property
    def failed(self) -> np.ndarray:
        return ~np.isfinite(self.rmse)


def score(results, task: LFTask, split: SplitPair) -> ErrorRow:
    a, b = split.test_range
    actual = task.y[a:b]
    r = np.full(N_MODELS, np.inf)
    m = np.full(N_MODELS, np.inf)
    ft = np.zeros(N_MODELS)
    for res in results:
        i = int(res.model_id) - 1
        ft[i] = res.fit_time
        if res.ok:
            r[i] = rmse(res.y_hat, actual)
            m[i] = mape(res.y_hat, actual)
    return ErrorRow(r, m, ft)


def run_all(task: LFTask, split: SplitPair, seed: int, config: ZooConfig = DEFAULT_ZOO) -> ErrorRow:
    """Error row over all ten models in id order; failures carry infinite error."""
    results = [forecast(m, task, split, derive_seed(seed, task.id, split.test_start, int(m)), config)
               for m in MODEL_IDS]
    return score(results, task, split)
