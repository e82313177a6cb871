"""JSON persistence for labels and the meta-knowledge store."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StoreVersionError
from .evaluation import CorpusSplit
from .features import FEATURE_NAMES
from .labeling import CorpusLabels, LabelConfig, LabelDistribution, TaskLabel
from .metalearners import MetaHyper, TrainedClassifier
from .models import ZooConfig
from .models.lstm import LstmConfig
from .models.sarima import SarimaConfig
from .models.similar_day import SdParams
from .models.svr import SvrConfig
from .voting import CalibrationCurve

STORE_FORMAT = "lfselect-store"
LABELS_FORMAT = "lfselect-labels"
STORE_VERSION = 1


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def encode_floats(a) -> list:
    """Nested list with non-finite values as null (JSON has no infinity)."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        v = float(arr)
        return v if math.isfinite(v) else None
    return [encode_floats(x) for x in arr]


def decode_floats(a) -> np.ndarray:
    def conv(x):
        if isinstance(x, list):
            return [conv(v) for v in x]
        return np.inf if x is None else float(x)

    return np.array(conv(a), dtype=float)


# ---------------------------------------------------------------- configs

def zoo_to_dict(zoo: ZooConfig) -> dict:
    return dataclasses.asdict(zoo)


def zoo_from_dict(d: dict) -> ZooConfig:
    return ZooConfig(
        sarima=SarimaConfig(**d.get("sarima", {})),
        lstm=LstmConfig(**d.get("lstm", {})),
        svr=SvrConfig(**d.get("svr", {})),
        sd=SdParams(**d.get("sd", {})),
    )


def label_config_to_dict(c: LabelConfig) -> dict:
    return {"step": c.step, "l_max": c.l_max, "threshold": c.threshold,
            "refit_anchors": c.refit_anchors, "zoo": zoo_to_dict(c.zoo)}


def label_config_from_dict(d: dict) -> LabelConfig:
    d = dict(d)
    zoo = zoo_from_dict(d.pop("zoo", {}))
    return LabelConfig(zoo=zoo, **d)


# ---------------------------------------------------------------- labels

def labels_to_dict(labels: CorpusLabels) -> dict:
    return {
        "format": LABELS_FORMAT,
        "version": STORE_VERSION,
        "task_ids": list(labels.task_ids),
        "failed": dict(sorted(labels.failed.items())),
        "tasks": [
            {
                "phi": lb.phi,
                "omega": lb.distribution.omega.tolist(),
                "L": lb.distribution.L,
                "pcc": encode_floats(lb.distribution.pcc),
                "n_runs": lb.distribution.n_runs,
                "stabilized": lb.stabilized,
                "rmse": encode_floats(lb.rmse),
                "mape": encode_floats(lb.mape),
                "feasible": [bool(x) for x in lb.feasible],
                "trace": [[int(L), encode_floats(p)] for L, p in lb.trace],
            }
            for lb in labels.labels
        ],
    }


def labels_from_dict(d: dict) -> CorpusLabels:
    _check(d, LABELS_FORMAT)
    out = []
    for tid, t in zip(d["task_ids"], d["tasks"]):
        pcc = t["pcc"]
        dist = LabelDistribution(np.array(t["omega"], float), int(t["L"]),
                                 float("nan") if pcc is None else float(pcc), int(t["n_runs"]))
        trace = tuple((int(L), float("nan") if p is None else float(p)) for L, p in t["trace"])
        out.append(TaskLabel(tid, int(t["phi"]), dist, bool(t["stabilized"]),
                             decode_floats(t["rmse"]), decode_floats(t["mape"]),
                             np.array(t["feasible"], bool), trace))
    return CorpusLabels(tuple(d["task_ids"]), tuple(out), dict(d.get("failed", {})))


def _check(d: dict, fmt: str) -> None:
    if d.get("format") != fmt:
        raise StoreVersionError(f"not a {fmt} document")
    if d.get("version") != STORE_VERSION:
        raise StoreVersionError(f"unsupported {fmt} version {d.get('version')!r}, expected {STORE_VERSION}")


# ---------------------------------------------------------------- store

@dataclass(frozen=True)
class MetaKnowledgeStore:
    seed: int
    task_ids: tuple[str, ...]
    F: np.ndarray  # J x 16
    labels: CorpusLabels
    split: CorpusSplit
    classifiers: dict  # kind -> TrainedClassifier
    curves: dict  # kind -> CalibrationCurve
    label_config: LabelConfig
    meta_hyper: MetaHyper
    n_bins: int
    update_threshold: float | None = None  # accepted and stored, no behaviour attached

    def __post_init__(self) -> None:
        J = len(self.task_ids)
        if self.F.shape != (J, len(FEATURE_NAMES)):
            raise ValueError("feature matrix shape does not match the task list")
        if len(self.labels.labels) != J or tuple(self.labels.task_ids) != tuple(self.task_ids):
            raise ValueError("labels do not match the task list")

    @property
    def phi(self) -> np.ndarray:
        return self.labels.phi

    @property
    def Z(self) -> np.ndarray:
        return self.labels.Z

    @property
    def zoo(self) -> ZooConfig:
        return self.label_config.zoo

    def to_dict(self) -> dict:
        return {
            "format": STORE_FORMAT,
            "version": STORE_VERSION,
            "seed": self.seed,
            "task_ids": list(self.task_ids),
            "feature_names": list(FEATURE_NAMES),
            "features": encode_floats(self.F),
            "labels": labels_to_dict(self.labels),
            "split": self.split.to_dict(),
            "classifiers": {k: c.to_dict() for k, c in self.classifiers.items()},
            "curves": {k: c.to_dict() for k, c in self.curves.items()},
            "config": {
                "label": label_config_to_dict(self.label_config),
                "meta": dataclasses.asdict(self.meta_hyper),
                "n_bins": self.n_bins,
                "update_threshold": self.update_threshold,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> MetaKnowledgeStore:
        _check(d, STORE_FORMAT)
        if list(d["feature_names"]) != list(FEATURE_NAMES):
            raise StoreVersionError("store feature layout differs from this version")
        cfg = d["config"]
        return cls(
            seed=int(d["seed"]),
            task_ids=tuple(d["task_ids"]),
            F=decode_floats(d["features"]).reshape(len(d["task_ids"]), len(FEATURE_NAMES)),
            labels=labels_from_dict(d["labels"]),
            split=CorpusSplit.from_dict(d["split"]),
            classifiers={k: TrainedClassifier.from_dict(v) for k, v in d["classifiers"].items()},
            curves={k: CalibrationCurve.from_dict(v) for k, v in d["curves"].items()},
            label_config=label_config_from_dict(cfg["label"]),
            meta_hyper=MetaHyper(**cfg["meta"]),
            n_bins=int(cfg["n_bins"]),
            update_threshold=cfg.get("update_threshold"),
        )

    def dumps(self) -> str:
        return dumps(self.to_dict())


def save_store(store: MetaKnowledgeStore, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(store.dumps(), encoding="utf-8")
    return p


def load_store(path) -> MetaKnowledgeStore:
    return MetaKnowledgeStore.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_labels(labels: CorpusLabels, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(labels_to_dict(labels)), encoding="utf-8")
    return p


def load_labels(path) -> CorpusLabels:
    return labels_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
