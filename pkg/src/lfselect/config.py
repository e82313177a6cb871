"""JSON configuration files mapped onto the frozen configuration dataclasses."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .labeling import LabelConfig
from .metalearners import MetaHyper
from .models import ZooConfig
from .models.lstm import LstmConfig
from .models.sarima import SarimaConfig
from .models.similar_day import SdParams
from .models.svr import SvrConfig
from .pipeline import PipelineConfig
from .taskgen import CorpusSpec

TOP_LEVEL = ("seed", "threads", "verbose", "corpus", "label", "zoo", "meta", "calibration",
             "mask", "update_threshold")
CORPUS_KEYS = ("history_days", "exclusions")
CALIBRATION_KEYS = ("n_bins",)
ZOO_SECTIONS = {"sarima": SarimaConfig, "lstm": LstmConfig, "svr": SvrConfig, "sd": SdParams}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    threads: int = 1
    verbose: bool = False
    corpus: CorpusSpec = field(default_factory=CorpusSpec)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


def _names(cls) -> tuple[str, ...]:
    return tuple(f.name for f in dataclasses.fields(cls))


def _section(data, path: str, allowed) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"config key '{path}' must be an object")
    for k in data:
        if k not in allowed:
            raise ConfigError(f"unknown config key '{path}.{k}'" if path else f"unknown config key '{k}'")
    return data


def _build(cls, data, path: str, exclude=()):
    data = _section(data, path, [n for n in _names(cls) if n not in exclude])
    for k, v in data.items():
        if not isinstance(v, (int, float, bool)) or v is None:
            raise ConfigError(f"config key '{path}.{k}' must be a number or boolean")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key '{path}': {exc}") from None


def _int(v, path: str, lo: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"config key '{path}' must be an integer >= {lo}")
    return v


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded config document; any unrecognized key is rejected by name."""
    data = _section(data, "", TOP_LEVEL)
    seed = _int(data.get("seed", 0), "seed")
    threads = _int(data.get("threads", 1), "threads", 1)
    verbose = data.get("verbose", False)
    if not isinstance(verbose, bool):
        raise ConfigError("config key 'verbose' must be a boolean")

    corpus = _section(data.get("corpus", {}), "corpus", CORPUS_KEYS)
    days = corpus.get("history_days", list(CorpusSpec().history_days))
    if not isinstance(days, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in days):
        raise ConfigError("config key 'corpus.history_days' must be a list of integers")
    exclusions = corpus.get("exclusions", True)
    if not isinstance(exclusions, bool):
        raise ConfigError("config key 'corpus.exclusions' must be a boolean")

    zoo_data = _section(data.get("zoo", {}), "zoo", tuple(ZOO_SECTIONS))
    zoo = ZooConfig(**{name: _build(cls, zoo_data.get(name, {}), f"zoo.{name}")
                       for name, cls in ZOO_SECTIONS.items()})
    label = _build(LabelConfig, data.get("label", {}), "label", exclude=("zoo",))
    label = dataclasses.replace(label, zoo=zoo)
    meta = _build(MetaHyper, data.get("meta", {}), "meta")
    cal = _section(data.get("calibration", {}), "calibration", CALIBRATION_KEYS)
    n_bins = _int(cal.get("n_bins", 10), "calibration.n_bins", 1)
    mask = data.get("mask", True)
    if not isinstance(mask, bool):
        raise ConfigError("config key 'mask' must be a boolean")
    thr = data.get("update_threshold")
    if thr is not None and (isinstance(thr, bool) or not isinstance(thr, (int, float))):
        raise ConfigError("config key 'update_threshold' must be a number or null")

    try:
        spec = CorpusSpec(history_days=tuple(days), seed=seed, exclusions=exclusions)
    except ValueError as exc:
        raise ConfigError(f"config key 'corpus': {exc}") from None
    pipe = PipelineConfig(seed=seed, label=label, meta=meta, n_bins=n_bins, mask=mask,
                          workers=threads, update_threshold=thr)
    return RunConfig(seed, threads, verbose, spec, pipe)


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON ({exc})") from None
    return parse_config(data)


def with_overrides(cfg: RunConfig, seed: int | None = None, threads: int | None = None,
                   verbose: bool | None = None) -> RunConfig:
    """Command-line flags take precedence over the config file."""
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed, corpus=dataclasses.replace(cfg.corpus, seed=seed),
                                  pipeline=dataclasses.replace(cfg.pipeline, seed=seed))
    if threads is not None:
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = dataclasses.replace(cfg, threads=threads,
                                  pipeline=dataclasses.replace(cfg.pipeline, workers=threads))
    if verbose:
        cfg = dataclasses.replace(cfg, verbose=True)
    return cfg
