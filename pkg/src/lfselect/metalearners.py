"""Random forest, k-nearest-neighbour, Gaussian naive Bayes and linear discriminant classifiers.

All four map a task's meta-features to a length-10 score vector over candidate
model ids. Features are z-scored with training statistics; constant columns are
dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import SingleClass, TooFewSamples
from .models import N_MODELS, derive_seed

MIN_SAMPLES = 10


class ClassifierKind(str, Enum):
    RF = "RF"
    KNN = "KNN"
    NB = "NB"
    LD = "LD"


KINDS = tuple(ClassifierKind)


@dataclass(frozen=True)
class MetaHyper:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_split: int = 2
    k: int = 5
    var_floor: float = 1e-6
    ld_lambda: float = 1e-3


@dataclass(frozen=True)
class TrainedClassifier:
    kind: ClassifierKind
    classes: np.ndarray  # sorted model ids seen in training
    class_counts: np.ndarray
    keep: np.ndarray  # boolean mask of retained feature columns
    mu: np.ndarray
    sigma: np.ndarray
    params: dict = field(repr=False)

    def transform(self, F) -> np.ndarray:
        F = np.atleast_2d(np.asarray(F, dtype=float))
        return (F[:, self.keep] - self.mu) / self.sigma

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "classes": self.classes.tolist(),
            "class_counts": self.class_counts.tolist(),
            "keep": self.keep.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "params": _encode(self.params),
        }

    @classmethod
    def from_dict(cls, data: dict) -> TrainedClassifier:
        kind = ClassifierKind(data["kind"])
        return cls(
            kind,
            np.array(data["classes"], dtype=int),
            np.array(data["class_counts"], dtype=int),
            np.array(data["keep"], dtype=bool),
            np.array(data["mu"], dtype=float),
            np.array(data["sigma"], dtype=float),
            _decode(data["params"]),
        )


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


# ---------------------------------------------------------------- CART trees

def _gini_split(x: np.ndarray, y_onehot: np.ndarray) -> tuple[float, float]:
    """Best threshold on one feature by weighted Gini impurity; (impurity, threshold)."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    left = np.cumsum(y_onehot[order], axis=0)[:-1]
    n = xs.size
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return math.inf, 0.0
    total = left[-1] + y_onehot[order[-1]]
    right = total - left
    nl = np.arange(1, n, dtype=float)
    nr = n - nl
    gl = 1.0 - np.sum(left * left, axis=1) / (nl * nl)
    gr = 1.0 - np.sum(right * right, axis=1) / (nr * nr)
    imp = (nl * gl + nr * gr) / n
    imp[~valid] = math.inf
    i = int(np.argmin(imp))
    return float(imp[i]), 0.5 * (xs[i] + xs[i + 1])


def build_tree(X: np.ndarray, y: np.ndarray, n_classes: int, max_depth: int,
               max_features: int, rng: np.random.Generator, min_split: int = 2) -> dict:
    """Grow a CART tree; ``y`` holds class indices. Leaves store their majority class."""
    feature, threshold, left, right, value = [], [], [], [], []
    onehot = np.eye(n_classes)[y]

    def grow(rows: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts = onehot[rows].sum(axis=0)
        value.append(int(np.argmax(counts)))
        if depth >= max_depth or rows.size < min_split or np.count_nonzero(counts) <= 1:
            return node
        parent = 1.0 - float(np.sum((counts / rows.size) ** 2))
        cand = rng.choice(X.shape[1], size=min(max_features, X.shape[1]), replace=False)
        best = (math.inf, -1, 0.0)
        for f in cand:
            imp, thr = _gini_split(X[rows, f], onehot[rows])
            if imp < best[0]:
                best = (imp, int(f), thr)
        if best[1] < 0 or best[0] >= parent:
            return node
        f, thr = best[1], best[2]
        mask = X[rows, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = grow(rows[mask], depth + 1)
        right[node] = grow(rows[~mask], depth + 1)
        return node

    grow(np.arange(y.size), 0)
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=float),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.int64),
    }


def tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    feat, thr, lc, rc = tree["feature"], tree["threshold"], tree["left"], tree["right"]
    active = feat[node] >= 0
    while active.any():
        idx = np.nonzero(active)[0]
        f = feat[node[idx]]
        go_left = X[idx, f] <= thr[node[idx]]
        node[idx] = np.where(go_left, lc[node[idx]], rc[node[idx]])
        active = feat[node] >= 0
    return tree["value"][node]


# ---------------------------------------------------------------- training

def _standardize(F: np.ndarray):
    mu = F.mean(axis=0)
    sigma = F.std(axis=0)
    scale = np.max(np.abs(F), axis=0)
    keep = sigma > 1e-12 * np.maximum(scale, 1e-300)
    return keep, mu[keep], sigma[keep]


def train(kind, F_train, phi_train, hyper: MetaHyper = MetaHyper(), seed: int = 0) -> TrainedClassifier:
    kind = ClassifierKind(kind)
    F = np.asarray(F_train, dtype=float)
    phi = np.asarray(phi_train, dtype=int)
    if F.ndim != 2 or F.shape[0] != phi.size:
        raise ValueError("feature matrix and labels disagree in length")
    if phi.size < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} training tasks, got {phi.size}")
    classes, yi, counts = np.unique(phi, return_inverse=True, return_counts=True)
    if classes.size < 2:
        raise SingleClass("training labels contain a single class")
    keep, mu, sigma = _standardize(F)
    if not keep.any():
        raise ValueError("every feature column is constant")
    X = (F[:, keep] - mu) / sigma
    C = classes.size

    if kind is ClassifierKind.RF:
        max_features = max(1, int(math.floor(math.sqrt(X.shape[1]))))
        trees = []
        for b in range(hyper.n_trees):
            rng = np.random.default_rng(derive_seed(seed, "rf-tree", b))
            rows = rng.integers(0, X.shape[0], size=X.shape[0])
            trees.append(build_tree(X[rows], yi[rows], C, hyper.max_depth, max_features, rng,
                                    hyper.min_samples_split))
        params = {"trees": trees}
    elif kind is ClassifierKind.KNN:
        params = {"X": X.copy(), "y": yi.astype(np.int64), "k": int(hyper.k)}
    elif kind is ClassifierKind.NB:
        means = np.array([X[yi == c].mean(axis=0) for c in range(C)])
        var = np.array([X[yi == c].var(axis=0) for c in range(C)])
        params = {"means": means, "var": np.maximum(var, hyper.var_floor),
                  "log_prior": np.log(counts / counts.sum())}
    else:
        means = np.array([X[yi == c].mean(axis=0) for c in range(C)])
        resid = X - means[yi]
        dof = max(X.shape[0] - C, 1)
        cov = resid.T @ resid / dof + hyper.ld_lambda * np.eye(X.shape[1])
        W = np.linalg.solve(cov, means.T)  # (D, C)
        b = -0.5 * np.sum(means.T * W, axis=0) + np.log(counts / counts.sum())
        params = {"W": W, "b": b}
    return TrainedClassifier(kind, classes.astype(int), counts.astype(int), keep, mu, sigma, params)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def class_scores(clf: TrainedClassifier, F) -> np.ndarray:
    """Scores over the classifier's own class list, shape (n, n_classes)."""
    X = clf.transform(F)
    C = clf.classes.size
    p = clf.params
    if clf.kind is ClassifierKind.RF:
        votes = np.zeros((X.shape[0], C))
        rows = np.arange(X.shape[0])
        for tree in p["trees"]:
            np.add.at(votes, (rows, tree_predict(tree, X)), 1.0)
        return votes / len(p["trees"])
    if clf.kind is ClassifierKind.KNN:
        Xt, yt = p["X"], p["y"]
        k = min(int(p["k"]), Xt.shape[0])
        d2 = np.sum((X[:, None, :] - Xt[None, :, :]) ** 2, axis=2)
        nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out = np.zeros((X.shape[0], C))
        for r in range(X.shape[0]):
            np.add.at(out[r], yt[nn[r]], 1.0)
        return out / k
    if clf.kind is ClassifierKind.NB:
        means, var = p["means"], p["var"]
        ll = -0.5 * np.sum(np.log(2 * np.pi * var)[None] + (X[:, None, :] - means[None]) ** 2 / var[None], axis=2)
        return _softmax(ll + p["log_prior"][None, :])
    return _softmax(X @ p["W"] + p["b"][None, :])


def predict_scores(clf: TrainedClassifier, F) -> np.ndarray:
    """Length-10 score vectors (one row per input); absent classes score 0."""
    F = np.asarray(F, dtype=float)
    single = F.ndim == 1
    s = class_scores(clf, F)
    out = np.zeros((s.shape[0], N_MODELS))
    out[:, clf.classes - 1] = s
    out /= out.sum(axis=1, keepdims=True)
    return out[0] if single else out


def argmax_with_ties(scores: np.ndarray, clf: TrainedClassifier, atol: float = 1e-12) -> int:
    """Highest score; ties go to the class more frequent in training, then the lower id."""
    top = scores.max()
    tied = np.nonzero(scores >= top - atol)[0] + 1
    if tied.size == 1:
        return int(tied[0])
    freq = {int(c): int(n) for c, n in zip(clf.classes, clf.class_counts)}
    return int(min(tied, key=lambda m: (-freq.get(int(m), 0), int(m))))


def predict(clf: TrainedClassifier, F) -> np.ndarray | int:
    F = np.asarray(F, dtype=float)
    S = np.atleast_2d(predict_scores(clf, F))
    ids = np.array([argmax_with_ties(s, clf) for s in S], dtype=int)
    return int(ids[0]) if F.ndim == 1 else ids


def train_all(F_train, phi_train, hyper: MetaHyper = MetaHyper(), seed: int = 0) -> dict:
    return {k: train(k, F_train, phi_train, hyper, seed) for k in KINDS}
