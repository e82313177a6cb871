"""Score calibration and the scoring-voting combiner over several metalearners."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import TooFewSamples
from .metalearners import TrainedClassifier, argmax_with_ties, predict_scores
from .models import N_MODELS


def pav(values, weights) -> np.ndarray:
    """Weighted pool-adjacent-violators: the non-decreasing least-squares fit."""
    v = [float(x) for x in values]
    w = [float(x) for x in weights]
    blocks = []  # [mean, weight, count]
    for vi, wi in zip(v, w):
        blocks.append([vi, wi, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2, c2 = blocks.pop()
            m1, w1, c1 = blocks.pop()
            tw = w1 + w2
            blocks.append([(m1 * w1 + m2 * w2) / tw if tw > 0 else 0.5 * (m1 + m2), tw, c1 + c2])
    out = []
    for m, _, c in blocks:
        out.extend([m] * c)
    return np.array(out)


@dataclass(frozen=True)
class CalibrationCurve:
    kind: str
    centers: np.ndarray  # strictly increasing knot positions (bin mean scores)
    values: np.ndarray  # isotonic accuracy at each knot
    bin_edges: np.ndarray
    bin_accuracy: np.ndarray  # raw per-bin accuracy before smoothing
    bin_counts: np.ndarray
    val_accuracy: float

    def __call__(self, score):
        return np.clip(np.interp(score, self.centers, self.values), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "centers": self.centers.tolist(),
            "values": self.values.tolist(),
            "bin_edges": self.bin_edges.tolist(),
            "bin_accuracy": self.bin_accuracy.tolist(),
            "bin_counts": self.bin_counts.tolist(),
            "val_accuracy": self.val_accuracy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CalibrationCurve:
        return cls(d["kind"], np.array(d["centers"], float), np.array(d["values"], float),
                   np.array(d["bin_edges"], float), np.array(d["bin_accuracy"], float),
                   np.array(d["bin_counts"], int), float(d["val_accuracy"]))


def fit_curve(top_scores, correct, n_bins: int = 10, kind: str = "") -> CalibrationCurve:
    """Equal-count bins on the top score, isotonic per-bin accuracy, linear between bin centres."""
    s = np.asarray(top_scores, dtype=float)
    c = np.asarray(correct, dtype=float)
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    if s.size < 5 * n_bins:
        raise TooFewSamples(f"calibration needs {5 * n_bins} samples, got {s.size}")
    order = np.argsort(s, kind="stable")
    chunks = np.array_split(order, n_bins)
    centers = np.array([s[ch].mean() for ch in chunks])
    acc = np.array([c[ch].mean() for ch in chunks])
    counts = np.array([ch.size for ch in chunks])
    edges = np.array([s[chunks[0]].min()] + [s[ch].max() for ch in chunks])
    # bins sharing a centre (heavy ties) are merged so the knots stay strictly increasing
    kx, ky, kw = [], [], []
    for x, y, w in zip(centers, acc, counts):
        if kx and np.isclose(x, kx[-1], rtol=0.0, atol=1e-12):
            ky[-1] = (ky[-1] * kw[-1] + y * w) / (kw[-1] + w)
            kw[-1] += w
        else:
            kx.append(x)
            ky.append(y)
            kw.append(w)
    values = np.clip(pav(ky, kw), 0.0, 1.0)
    return CalibrationCurve(kind, np.array(kx), values, edges, acc, counts, float(c.mean()))


def fit_calibration(clf: TrainedClassifier, F_val, phi_val, n_bins: int = 10) -> CalibrationCurve:
    from .metalearners import predict

    S = np.atleast_2d(predict_scores(clf, np.asarray(F_val, dtype=float)))
    pred = np.atleast_1d(predict(clf, np.asarray(F_val, dtype=float)))
    correct = pred == np.asarray(phi_val, dtype=int)
    return fit_curve(S.max(axis=1), correct, n_bins, clf.kind.value)


@dataclass(frozen=True)
class Nomination:
    kind: str
    model_id: int
    score: float
    eta: float


@dataclass(frozen=True)
class Recommendation:
    models: tuple[int, ...]
    accuracy: tuple[float, ...]  # aggregated calibrated accuracy A(b)
    learners: tuple[str, ...]  # metalearner attaining A(b)
    nominations: tuple[Nomination, ...]

    @property
    def top(self) -> int:
        return self.models[0]


def _masked(scores: np.ndarray, feasible) -> np.ndarray:
    s = np.asarray(scores, dtype=float).copy()
    if feasible is not None:
        s[~np.asarray(feasible, dtype=bool)] = -np.inf
    return s


def _nominee(scores: np.ndarray, freq: Mapping[int, int] | None) -> int:
    top = scores.max()
    tied = np.nonzero(scores >= top - 1e-12)[0] + 1
    freq = freq or {}
    return int(min(tied, key=lambda m: (-freq.get(int(m), 0), int(m))))


def nominate(scores: Mapping[str, np.ndarray], curves: Mapping[str, CalibrationCurve],
             feasible=None, class_freq: Mapping[str, Mapping[int, int]] | None = None) -> list[Nomination]:
    out = []
    for kind in curves:
        s = _masked(scores[kind], feasible)
        if not np.isfinite(s).any():
            continue
        m = _nominee(s, (class_freq or {}).get(kind))
        raw = float(scores[kind][m - 1])
        out.append(Nomination(kind, m, raw, float(curves[kind](raw))))
    return out


def _best_nomination(noms, curves) -> Nomination:
    return min(noms, key=lambda n: (-n.eta, -curves[n.kind].val_accuracy, n.model_id))


def vote(scores: Mapping[str, np.ndarray], curves: Mapping[str, CalibrationCurve],
         feasible=None, class_freq=None) -> int:
    """Each learner nominates its top model; the highest calibrated accuracy wins."""
    noms = nominate(scores, curves, feasible, class_freq)
    if not noms:
        raise ValueError("no feasible candidate to vote for")
    return _best_nomination(noms, curves).model_id


def rank(scores: Mapping[str, np.ndarray], curves: Mapping[str, CalibrationCurve], k: int = 10,
         feasible=None, class_freq=None) -> Recommendation:
    """Order candidates by A(b) = max over learners of h(S(b)); the vote winner always leads."""
    if not 1 <= k <= N_MODELS:
        raise ValueError(f"k must lie in 1..{N_MODELS}")
    kinds = list(curves)
    noms = nominate(scores, curves, feasible, class_freq)
    if not noms:
        raise ValueError("no feasible candidate to rank")
    winner = _best_nomination(noms, curves)
    mask = np.ones(N_MODELS, bool) if feasible is None else np.asarray(feasible, dtype=bool)
    H = np.array([curves[kd](np.asarray(scores[kd], dtype=float)) for kd in kinds])  # (M, 10)
    raw = np.array([np.asarray(scores[kd], dtype=float) for kd in kinds])
    A = H.max(axis=0)
    val_acc = np.array([curves[kd].val_accuracy for kd in kinds])
    best_learner = []
    for b in range(N_MODELS):
        tied = np.nonzero(H[:, b] >= A[b] - 1e-15)[0]
        best_learner.append(kinds[int(min(tied, key=lambda i: (-val_acc[i], i)))])
    A[winner.model_id - 1] = max(A[winner.model_id - 1], winner.eta)
    best_learner[winner.model_id - 1] = winner.kind
    rest = [b for b in range(1, N_MODELS + 1) if mask[b - 1] and b != winner.model_id]
    rest.sort(key=lambda b: (-A[b - 1], -raw[:, b - 1].max(), b))
    ordered = ([winner.model_id] + rest)[:k]
    return Recommendation(
        tuple(ordered), tuple(float(A[b - 1]) for b in ordered),
        tuple(best_learner[b - 1] for b in ordered), tuple(noms),
    )
