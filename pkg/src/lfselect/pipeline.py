"""Offline training and the online recommendation path over a meta-knowledge store."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AllInfeasible, LFSelectError, TooFewSamples
from .evaluation import BenchmarkReport, benchmark, split_corpus
from .features import FEATURE_NAMES, extract_features
from .labeling import CorpusLabels, LabelConfig, label_corpus
from .metalearners import KINDS, MetaHyper, predict_scores, train_all
from .models import N_MODELS, feasibility_mask
from .series import LFTask
from .store import MetaKnowledgeStore
from .voting import Recommendation, fit_calibration, rank

log = logging.getLogger(__name__)

MIN_PER_BIN = 5

# sizes and load levels span orders of magnitude across aggregation levels
LOG_FEATURES = ("data_length", "granularity", "horizon", "n_customers", "mean", "max", "min", "std")
_LOG_COLS = np.array([FEATURE_NAMES.index(n) for n in LOG_FEATURES])


def model_inputs(F) -> np.ndarray:
    """Metalearner inputs: magnitude features on a signed log scale, the rest unchanged."""
    X = np.array(F, dtype=float)
    cols = X[..., _LOG_COLS]
    X[..., _LOG_COLS] = np.sign(cols) * np.log1p(np.abs(cols))
    return X


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    label: LabelConfig = field(default_factory=LabelConfig)
    meta: MetaHyper = field(default_factory=MetaHyper)
    n_bins: int = 10
    mask: bool = True
    workers: int = 1
    update_threshold: float | None = None  # reserved; stored but never acted on


def effective_bins(n_val: int, n_bins: int) -> int:
    """Bin count the validation partition can support at five samples per bin."""
    b = min(n_bins, n_val // MIN_PER_BIN)
    if b < 1:
        raise TooFewSamples(f"validation partition of {n_val} tasks is too small to calibrate")
    return b


def subset_labels(labels: CorpusLabels, keep_ids) -> CorpusLabels:
    keep = set(keep_ids)
    pairs = [(i, lb) for i, lb in zip(labels.task_ids, labels.labels) if i in keep]
    return CorpusLabels(tuple(i for i, _ in pairs), tuple(lb for _, lb in pairs), dict(labels.failed))


def featurize(tasks: dict, task_ids) -> tuple[np.ndarray, list[str], dict]:
    """Feature rows for ``task_ids``; tasks whose features cannot be computed are reported and skipped."""
    rows, ok, failed = [], [], {}
    for tid in task_ids:
        try:
            rows.append(extract_features(tasks[tid]).to_array())
            ok.append(tid)
        except LFSelectError as exc:
            failed[tid] = f"{type(exc).__name__}: {exc}"
            log.warning("features failed for %s: %s", tid, exc)
    F = np.array(rows, dtype=float).reshape(len(rows), -1)
    return F, ok, failed


def train_store(tasks, config: PipelineConfig = PipelineConfig(), labels: CorpusLabels | None = None,
                progress=None) -> MetaKnowledgeStore:
    """label -> features -> split -> train four metalearners -> calibrate each on validation."""
    by_id = {t.id: t for t in tasks}
    if labels is None:
        labels = label_corpus(list(tasks), config.seed, config.label, config.workers, progress)
    else:
        missing = [i for i in labels.task_ids if i not in by_id]
        if missing:
            raise ValueError(f"labels refer to tasks absent from the corpus: {missing[:3]}")
    F, ok, failed = featurize(by_id, labels.task_ids)
    if failed:
        labels = subset_labels(labels, ok)
        labels = CorpusLabels(labels.task_ids, labels.labels, {**labels.failed, **failed})
    split = split_corpus(len(ok), config.seed)
    phi = labels.phi
    X = model_inputs(F)
    classifiers = train_all(X[split.train], phi[split.train], config.meta, config.seed)
    n_bins = effective_bins(split.validation.size, config.n_bins)
    curves = {k.value: fit_calibration(c, X[split.validation], phi[split.validation], n_bins)
              for k, c in classifiers.items()}
    return MetaKnowledgeStore(
        seed=config.seed,
        task_ids=tuple(ok),
        F=F,
        labels=labels,
        split=split,
        classifiers={k.value: c for k, c in classifiers.items()},
        curves=curves,
        label_config=config.label,
        meta_hyper=config.meta,
        n_bins=n_bins,
        update_threshold=config.update_threshold,
    )


def learner_scores(store: MetaKnowledgeStore, X) -> dict[str, np.ndarray]:
    """Raw classifier scores for metalearner inputs ``X`` (see :func:`model_inputs`)."""
    return {k.value: predict_scores(store.classifiers[k.value], X) for k in KINDS}


def class_frequencies(store: MetaKnowledgeStore) -> dict:
    return {k: dict(zip(c.classes.tolist(), c.class_counts.tolist())) for k, c in store.classifiers.items()}


def recommend_features(store: MetaKnowledgeStore, f, k: int = 3, feasible=None) -> Recommendation:
    """Forward pass only: classifier scores, calibrated accuracies, rank."""
    scores = learner_scores(store, model_inputs(f))
    if feasible is not None and not np.asarray(feasible, dtype=bool).any():
        raise AllInfeasible("no candidate model is feasible for this task")
    return rank(scores, store.curves, k, feasible, class_frequencies(store))


def recommend(store: MetaKnowledgeStore, task: LFTask, k: int = 3, mask: bool = True) -> Recommendation:
    """Recommend ``k`` models for a new task; no model is fitted."""
    f = extract_features(task).to_array()
    feasible = feasibility_mask(task, store.zoo) if mask else None
    return recommend_features(store, f, min(k, N_MODELS), feasible)


def benchmark_store(store: MetaKnowledgeStore, mask: bool = True) -> BenchmarkReport:
    """Evaluate the stored ensemble on the store's held-out test partition."""
    t = store.split.test
    lab = store.labels
    return benchmark(model_inputs(store.F[t]), lab.phi[t], lab.Z[:, t], lab.Z_mape[:, t], lab.feasible[:, t],
                     store.classifiers, store.curves, mask)
