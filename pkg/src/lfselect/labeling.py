"""Best-model labels from repeated random splits with a correlation stopping rule."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AllInfeasible, LengthMismatch, LFSelectError
from .models import (
    DEFAULT_ZOO,
    MODEL_IDS,
    N_MODELS,
    ErrorRow,
    FittedModel,
    ForecastResult,
    ZooConfig,
    derive_seed,
    feasibility_mask,
    fit,
    predict_many,
    score,
)
from .series import LFTask, SplitPair, draw_splits, split_positions

log = logging.getLogger(__name__)


def pearson(u, v) -> float:
    """Sample correlation; constant inputs give 1 when equal and 0 otherwise."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.size < 2:
        raise LengthMismatch("pearson needs two equal-length vectors of length >= 2")
    du, dv = u - u.mean(), v - v.mean()
    su, sv = float(np.sqrt(du @ du)), float(np.sqrt(dv @ dv))
    if su == 0.0 or sv == 0.0:
        return 1.0 if np.array_equal(u, v) else 0.0
    return float(np.clip((du @ dv) / (su * sv), -1.0, 1.0))


@dataclass(frozen=True)
class LabelConfig:
    step: int = 10
    l_max: int = 201
    threshold: float = 0.95
    # fits are shared by split origins in the same bucket; 0 refits at every origin
    refit_anchors: int = 4
    zoo: ZooConfig = field(default_factory=lambda: DEFAULT_ZOO)


@dataclass(frozen=True)
class LabelDistribution:
    omega: np.ndarray
    L: int
    pcc: float
    n_runs: int


@dataclass(frozen=True)
class TaskLabel:
    task_id: str
    phi: int
    distribution: LabelDistribution
    stabilized: bool
    rmse: np.ndarray  # mean over the final iteration's splits; inf if a model never succeeded
    mape: np.ndarray
    feasible: np.ndarray
    trace: tuple  # (L, pcc) per iteration after the first


class SplitEvaluator:
    """Evaluates all feasible models at a split origin, caching fits and rows."""

    def __init__(self, task: LFTask, seed: int, config: LabelConfig = LabelConfig()):
        self.task = task
        self.seed = seed
        self.config = config
        self.mask = feasibility_mask(task, config.zoo)
        self.lo, self.hi = split_positions(len(task), task.horizon)
        n_pos = self.hi - self.lo + 1
        a = config.refit_anchors
        self.stride = math.ceil(n_pos / a) if a > 0 else 0
        self._fits: dict = {}
        self._rows: dict[int, ErrorRow] = {}

    def fit_end(self, start: int) -> int:
        if self.stride == 0:
            return start
        return self.lo + ((start - self.lo) // self.stride) * self.stride

    def _fitted(self, model_id, split: SplitPair) -> FittedModel | None:
        end = self.fit_end(split.test_start)
        key = (int(model_id), end)
        if key not in self._fits:
            try:
                seed = derive_seed(self.seed, self.task.id, end, int(model_id))
                self._fits[key] = fit(model_id, self.task, split, seed, self.config.zoo, end)
            except (LFSelectError, np.linalg.LinAlgError) as exc:
                log.debug("fit failed for %s model %d: %s", self.task.id, int(model_id), exc)
                self._fits[key] = None
        return self._fits[key]

    def prefetch(self, starts) -> None:
        """Compute rows for new origins, batching forecasts that share a fit."""
        todo = sorted({int(s) for s in starts} - set(self._rows))
        if not todo:
            return
        k, n = self.task.horizon, len(self.task)
        splits = {s: SplitPair(s, k, n) for s in todo}
        y_hat: dict = {}
        for m in MODEL_IDS:
            if not self.mask[int(m) - 1]:
                continue
            groups: dict = {}
            for s in todo:
                groups.setdefault(self.fit_end(s), []).append(s)
            for members in groups.values():
                fm = self._fitted(m, splits[members[0]])
                preds = ([None] * len(members) if fm is None
                         else predict_many(fm, self.task, [splits[s] for s in members], self.config.zoo))
                for s, yh in zip(members, preds):
                    y_hat[(int(m), s)] = (yh, fm.fit_time if fm else 0.0)
        for s in todo:
            results = []
            for m in MODEL_IDS:
                if not self.mask[int(m) - 1]:
                    results.append(ForecastResult(m, None, 0.0, False))
                else:
                    yh, ft = y_hat[(int(m), s)]
                    results.append(ForecastResult(m, yh, ft, True))
            self._rows[s] = score(results, self.task, splits[s])

    def row(self, start: int) -> ErrorRow:
        self.prefetch([start])
        return self._rows[start]


def split_winner(row: ErrorRow) -> int | None:
    """1-based id of the strictly smallest RMSE (lowest id on ties); None if all failed."""
    if not np.isfinite(row.rmse).any():
        return None
    return int(np.argmin(row.rmse)) + 1


def _omega(winners) -> tuple[np.ndarray, int]:
    counts = np.zeros(N_MODELS)
    for w in winners:
        if w is not None:
            counts[w - 1] += 1
    n = int(counts.sum())
    return (counts / n if n else counts), n


def _mean_errors(rows, attr: str) -> np.ndarray:
    vals = np.array([getattr(r, attr) for r in rows])
    out = np.full(N_MODELS, np.inf)
    for i in range(N_MODELS):
        ok = np.isfinite(vals[:, i])
        if ok.any():
            out[i] = float(vals[ok, i].mean())
    return out


def label_task(task: LFTask, seed: int, config: LabelConfig = LabelConfig()) -> TaskLabel:
    ev = SplitEvaluator(task, seed, config)
    if not ev.mask.any():
        raise AllInfeasible(f"task {task.id}: no feasible candidate")
    rng = np.random.default_rng(derive_seed(seed, task.id))
    n, k = len(task), task.horizon

    def iteration(L: int):
        starts = [sp.test_start for sp in draw_splits(n, k, L, rng)]
        ev.prefetch(starts)
        rows = [ev.row(s) for s in starts]
        omega, runs = _omega(split_winner(r) for r in rows)
        return rows, omega, runs

    L = 1
    rows, omega, runs = iteration(L)
    pcc = float("nan")
    trace = []
    stabilized = False
    while L < config.l_max:
        L += config.step
        prev = omega
        rows, omega, runs = iteration(L)
        pcc = pearson(omega, prev)
        trace.append((L, pcc))
        if pcc >= config.threshold:
            stabilized = True
            break
    if runs == 0:
        raise AllInfeasible(f"task {task.id}: every candidate failed on every split")
    if not stabilized:
        log.warning("task %s did not stabilize by L=%d (P_cc=%.3f)", task.id, L, pcc)
    phi = int(np.argmax(omega)) + 1
    return TaskLabel(
        task.id, phi, LabelDistribution(omega, L, pcc, runs), stabilized,
        _mean_errors(rows, "rmse"), _mean_errors(rows, "mape"), ev.mask.copy(), tuple(trace),
    )


@dataclass(frozen=True)
class CorpusLabels:
    task_ids: tuple[str, ...]
    labels: tuple[TaskLabel, ...]
    failed: dict  # task id -> error message

    @property
    def phi(self) -> np.ndarray:
        return np.array([lb.phi for lb in self.labels], dtype=int)

    @property
    def Z(self) -> np.ndarray:
        """Error matrix, models by tasks."""
        return np.column_stack([lb.rmse for lb in self.labels]) if self.labels else np.zeros((N_MODELS, 0))

    @property
    def Z_mape(self) -> np.ndarray:
        return np.column_stack([lb.mape for lb in self.labels]) if self.labels else np.zeros((N_MODELS, 0))

    @property
    def feasible(self) -> np.ndarray:
        return np.column_stack([lb.feasible for lb in self.labels]) if self.labels else np.zeros((N_MODELS, 0), bool)


def _label_one(args):
    task, seed, config = args
    try:
        return label_task(task, seed, config)
    except LFSelectError as exc:
        return f"{type(exc).__name__}: {exc}"


def label_corpus(tasks, seed: int, config: LabelConfig = LabelConfig(), workers: int = 1,
                 progress=None) -> CorpusLabels:
    """Label every task; failures are reported and excluded, order follows the input."""
    tasks = list(tasks)
    if not tasks:
        raise ValueError("empty corpus")
    jobs = [(t, seed, config) for t in tasks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_label_one, jobs, chunksize=1))
    else:
        out = []
        for i, job in enumerate(jobs):
            out.append(_label_one(job))
            if progress is not None:
                progress(i + 1, len(jobs), job[0].id)
    labels, ids, failed = [], [], {}
    for t, res in zip(tasks, out):
        if isinstance(res, TaskLabel):
            labels.append(res)
            ids.append(t.id)
        else:
            failed[t.id] = res
            log.warning("labeling failed for %s: %s", t.id, res)
    return CorpusLabels(tuple(ids), tuple(labels), failed)
