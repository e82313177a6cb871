"""Corpus partitioning, accuracy and error-ratio metrics, and the benchmark report."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AllInfeasible, LengthMismatch, TooFew
from .metalearners import KINDS, TrainedClassifier, predict, predict_scores
from .models import MODEL_NAMES, N_MODELS
from .voting import CalibrationCurve, rank

RANDOM_BASELINE = 1.0 / N_MODELS


@dataclass(frozen=True)
class CorpusSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("train", "validation", "test")}

    @classmethod
    def from_dict(cls, d: dict) -> CorpusSplit:
        return cls(*(np.array(d[k], dtype=int) for k in ("train", "validation", "test")))


def split_sizes(J: int) -> tuple[int, int, int]:
    n_train = (7 * J) // 10
    n_val = (2 * J) // 10
    return n_train, n_val, J - n_train - n_val


def split_corpus(J: int, seed: int) -> CorpusSplit:
    """Uniform random 70/20/10 partition of task indices (floor, floor, remainder)."""
    if J < 10:
        raise TooFew(f"need at least 10 tasks to split, got {J}")
    perm = np.random.default_rng(seed).permutation(J)
    a, b, _ = split_sizes(J)
    return CorpusSplit(np.sort(perm[:a]), np.sort(perm[a:a + b]), np.sort(perm[a + b:]))


def eta(predicted, actual) -> float:
    p = np.asarray(predicted)
    t = np.asarray(actual)
    if p.shape != t.shape or p.size == 0:
        raise LengthMismatch("prediction and label vectors must have equal non-zero length")
    return float(np.mean(p == t))


@dataclass(frozen=True)
class SerReport:
    e_select: float
    e_best: float
    ser: float
    failed: bool


def ser(Z: np.ndarray, selected: int, j: int, feasible=None) -> SerReport:
    """Selected-model RMSE over the best feasible RMSE on task ``j``."""
    col = np.asarray(Z, dtype=float)[:, j].copy()
    if feasible is not None:
        col[~np.asarray(feasible, dtype=bool)[:, j]] = np.inf
    if not np.isfinite(col).any():
        raise AllInfeasible(f"task column {j} has no feasible model")
    e_best = float(col[np.isfinite(col)].min())
    e_sel = float(col[int(selected) - 1])
    if not np.isfinite(e_sel):
        return SerReport(e_sel, e_best, float("inf"), True)
    if e_best == 0.0:
        return SerReport(e_sel, e_best, 1.0 if e_sel == 0.0 else float("inf"), e_sel != 0.0)
    return SerReport(e_sel, e_best, e_sel / e_best, False)


@dataclass(frozen=True)
class BenchmarkReport:
    n_test: int
    learner_accuracy: dict
    voted_accuracy: float
    hit_rate: np.ndarray  # cumulative, k = 1..10
    rank_fraction: np.ndarray  # share of tasks whose best model sits at rank r
    rank_ser: np.ndarray  # mean SER of the rank-r recommendation over successful tasks
    rank_mape: np.ndarray
    rank_failures: np.ndarray
    model_ser: np.ndarray  # fixed single model strategy, mean over tasks it can run
    model_failures: np.ndarray
    model_mape: np.ndarray
    model_label_counts: np.ndarray
    model_selected_counts: np.ndarray
    best_single_model: int
    random_baseline: float = RANDOM_BASELINE
    selections: tuple = field(default=(), repr=False)

    def rows(self) -> list[tuple[str, str, float]]:
        out = [("n_test", "all", float(self.n_test))]
        for k, v in self.learner_accuracy.items():
            out.append(("accuracy", k, v))
        out.append(("accuracy", "voted", self.voted_accuracy))
        out.append(("accuracy", "random", self.random_baseline))
        for i in range(N_MODELS):
            r = str(i + 1)
            out.append(("hit_rate_top_k", r, float(self.hit_rate[i])))
            out.append(("rank_fraction", r, float(self.rank_fraction[i])))
            out.append(("rank_ser", r, float(self.rank_ser[i])))
            out.append(("rank_mape", r, float(self.rank_mape[i])))
            out.append(("rank_failures", r, float(self.rank_failures[i])))
        for i, name in enumerate(MODEL_NAMES):
            out.append(("model_ser", name, float(self.model_ser[i])))
            out.append(("model_failures", name, float(self.model_failures[i])))
            out.append(("model_mape", name, float(self.model_mape[i])))
            out.append(("model_label_count", name, float(self.model_label_counts[i])))
            out.append(("model_selected_count", name, float(self.model_selected_counts[i])))
        out.append(("best_single_model", MODEL_NAMES[self.best_single_model - 1],
                    float(self.model_ser[self.best_single_model - 1])))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "name", "value"])
        for m, n, v in self.rows():
            w.writerow([m, n, repr(float(v))])
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"test tasks: {self.n_test}", "", "metalearner accuracy"]
        for k, v in self.learner_accuracy.items():
            lines.append(f"  {k:<8}{v:7.1%}")
        lines.append(f"  {'voted':<8}{self.voted_accuracy:7.1%}")
        lines.append(f"  {'random':<8}{self.random_baseline:7.1%}")
        lines += ["", "rank  hit@k   share   SER    MAPE    failures"]
        for i in range(N_MODELS):
            lines.append(f"{i + 1:>4}  {self.hit_rate[i]:6.1%}  {self.rank_fraction[i]:6.1%}  "
                         f"{self.rank_ser[i]:5.2f}  {self.rank_mape[i]:6.3f}  {int(self.rank_failures[i]):>4}")
        lines += ["", "model           labels  picked   SER    MAPE   failures"]
        for i, name in enumerate(MODEL_NAMES):
            lines.append(f"{name:<15} {int(self.model_label_counts[i]):>6} {int(self.model_selected_counts[i]):>7}  "
                         f"{self.model_ser[i]:5.2f}  {self.model_mape[i]:6.3f}  {int(self.model_failures[i]):>4}")
        lines.append("")
        lines.append(f"best fixed single model: {MODEL_NAMES[self.best_single_model - 1]}")
        return "\n".join(lines) + "\n"

    def write(self, directory) -> tuple[Path, Path]:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        csv_path, txt_path = root / "report.csv", root / "report.txt"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        txt_path.write_text(self.to_table(), encoding="utf-8")
        return csv_path, txt_path


def _nanmean(x) -> float:
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    return float(x.mean()) if x.size else float("nan")


def evaluate_rankings(rankings, phi, Z, Z_mape, feasible, learner_preds: dict) -> BenchmarkReport:
    """Aggregate ranked recommendations against labels and the error matrix (columns = tasks)."""
    phi = np.asarray(phi, dtype=int)
    J = phi.size
    hits = np.zeros(N_MODELS)
    rank_ser = [[] for _ in range(N_MODELS)]
    rank_mape = [[] for _ in range(N_MODELS)]
    rank_fail = np.zeros(N_MODELS)
    for j, models in enumerate(rankings):
        if phi[j] in models:
            hits[models.index(phi[j])] += 1
        for r, m in enumerate(models):
            rep = ser(Z, m, j, feasible)
            if rep.failed:
                rank_fail[r] += 1
            else:
                rank_ser[r].append(rep.ser)
                rank_mape[r].append(Z_mape[m - 1, j])
    top1 = np.array([r[0] for r in rankings], dtype=int)
    model_ser = np.full(N_MODELS, np.nan)
    model_fail = np.zeros(N_MODELS)
    model_mape = np.full(N_MODELS, np.nan)
    for i in range(N_MODELS):
        reps = [ser(Z, i + 1, j, feasible) for j in range(J)]
        model_fail[i] = sum(r.failed for r in reps)
        model_ser[i] = _nanmean([r.ser for r in reps if not r.failed])
        model_mape[i] = _nanmean(Z_mape[i][np.isfinite(Z[i])])
    ok = np.nonzero(model_fail == 0)[0]
    pool = ok if ok.size else np.arange(N_MODELS)
    best_single = int(pool[np.argmin(np.where(np.isnan(model_ser[pool]), np.inf, model_ser[pool]))]) + 1
    return BenchmarkReport(
        n_test=J,
        learner_accuracy={k: eta(v, phi) for k, v in learner_preds.items()},
        voted_accuracy=eta(top1, phi),
        hit_rate=np.cumsum(hits) / J,
        rank_fraction=hits / J,
        rank_ser=np.array([_nanmean(x) for x in rank_ser]),
        rank_mape=np.array([_nanmean(x) for x in rank_mape]),
        rank_failures=rank_fail,
        model_ser=model_ser,
        model_failures=model_fail,
        model_mape=model_mape,
        model_label_counts=np.bincount(phi - 1, minlength=N_MODELS)[:N_MODELS],
        model_selected_counts=np.bincount(top1 - 1, minlength=N_MODELS)[:N_MODELS],
        best_single_model=best_single,
        selections=tuple(tuple(r) for r in rankings),
    )


def benchmark(F, phi, Z, Z_mape, feasible, classifiers: dict[str, TrainedClassifier],
              curves: dict[str, CalibrationCurve], mask: bool = True) -> BenchmarkReport:
    """Evaluate the trained ensemble on the given (test) tasks; columns of Z index tasks."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    feasible = np.asarray(feasible, dtype=bool)
    kinds = [k.value for k in KINDS if k.value in classifiers]
    scores = {k: np.atleast_2d(predict_scores(classifiers[k], F)) for k in kinds}
    preds = {k: np.atleast_1d(predict(classifiers[k], F)) for k in kinds}
    freq = {k: dict(zip(classifiers[k].classes.tolist(), classifiers[k].class_counts.tolist())) for k in kinds}
    rankings = []
    for j in range(F.shape[0]):
        rec = rank({k: scores[k][j] for k in kinds}, {k: curves[k] for k in kinds}, N_MODELS,
                   feasible[:, j] if mask else None, freq)
        rankings.append(list(rec.models))
    return evaluate_rankings(rankings, phi, Z, Z_mape, feasible, preds)
