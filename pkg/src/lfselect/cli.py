"""Command-line entry point: generate, label, train, recommend, benchmark."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, with_overrides
from .errors import AllInfeasible, ConfigError, LFSelectError
from .labeling import label_corpus
from .models import MODEL_NAMES
from .pipeline import benchmark_store, featurize, recommend, train_store
from .series import CsvSchema, LFTask, TaskRequirements, ingest_csv
from .store import load_labels, load_store, save_labels, save_store
from .taskgen import generate_corpus, read_corpus, write_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("lfselect")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lfselect", description="Forecasting-model selection by meta-learning.")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config file)")
    p.add_argument("--config", type=Path, default=None, help="JSON configuration file")
    p.add_argument("--threads", type=int, default=None, help="worker processes for labeling")
    p.add_argument("--verbose", "-v", action="store_true", help="progress and timing on stderr")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic task corpus")
    g.add_argument("out_dir", type=Path)

    lb = sub.add_parser("label", help="label every corpus task with its best model")
    lb.add_argument("corpus_dir", type=Path)
    lb.add_argument("-o", "--out", type=Path, required=True, help="labels JSON file")

    t = sub.add_parser("train", help="label, featurize, split, train and calibrate; write the store")
    t.add_argument("corpus_dir", type=Path)
    t.add_argument("-o", "--out", type=Path, required=True, help="store JSON file")
    t.add_argument("--labels", type=Path, default=None, help="reuse a labels file from 'label'")

    r = sub.add_parser("recommend", help="rank candidate models for a new task")
    r.add_argument("store", type=Path)
    r.add_argument("task_csv", type=Path)
    r.add_argument("requirements", type=Path, help="JSON file with the six requirement fields")
    r.add_argument("-k", type=int, default=3)
    r.add_argument("--no-mask", action="store_true", help="do not drop infeasible models")
    r.add_argument("--json", action="store_true", help="print the recommendation as JSON")

    b = sub.add_parser("benchmark", help="evaluate the store on its held-out test tasks")
    b.add_argument("store", type=Path)
    b.add_argument("corpus_dir", type=Path, nargs="?", default=None,
                   help="recompute test-task features from this corpus")
    b.add_argument("-o", "--out", type=Path, required=True, help="report directory")
    b.add_argument("--no-mask", action="store_true")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config is not None else RunConfig()
    return with_overrides(cfg, args.seed, args.threads, args.verbose)


def _progress(cfg: RunConfig):
    if not cfg.verbose:
        return None

    def report(i, n, task_id):
        print(f"[{i}/{n}] labeled {task_id}", file=sys.stderr, flush=True)

    return report


def cmd_generate(args, cfg: RunConfig) -> int:
    tasks = generate_corpus(cfg.corpus)
    write_corpus(args.out_dir, tasks, cfg.corpus)
    print(f"wrote {len(tasks)} tasks to {args.out_dir}")
    return EXIT_OK


def cmd_label(args, cfg: RunConfig) -> int:
    tasks = read_corpus(args.corpus_dir)
    labels = label_corpus(tasks, cfg.seed, cfg.pipeline.label, cfg.threads, _progress(cfg))
    save_labels(labels, args.out)
    print(f"labeled {len(labels.labels)} tasks, {len(labels.failed)} failed -> {args.out}")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    tasks = read_corpus(args.corpus_dir)
    labels = load_labels(args.labels) if args.labels is not None else None
    store = train_store(tasks, cfg.pipeline, labels, _progress(cfg))
    save_store(store, args.out)
    print(f"trained on {store.split.train.size} tasks, calibrated on {store.split.validation.size} "
          f"({store.n_bins} bins) -> {args.out}")
    return EXIT_OK


def cmd_recommend(args, cfg: RunConfig) -> int:
    if not 1 <= args.k <= len(MODEL_NAMES):
        raise UsageError(f"-k must lie in 1..{len(MODEL_NAMES)}")
    store = load_store(args.store)
    req = TaskRequirements.from_dict(json.loads(args.requirements.read_text(encoding="utf-8")))
    load, weather = ingest_csv(args.task_csv, CsvSchema())
    task = LFTask(args.task_csv.stem, load, weather, req)
    t0 = time.perf_counter()
    rec = recommend(store, task, args.k, mask=not args.no_mask)
    elapsed = time.perf_counter() - t0
    if args.json:
        print(json.dumps({"models": list(rec.models), "names": [MODEL_NAMES[m - 1] for m in rec.models],
                          "accuracy": list(rec.accuracy), "seconds": elapsed}, sort_keys=True))
    else:
        print("rank,model_id,name,estimated_accuracy")
        for i, (m, a) in enumerate(zip(rec.models, rec.accuracy), start=1):
            print(f"{i},{m},{MODEL_NAMES[m - 1]},{a:.4f}")
    log.info("recommendation computed in %.3f s", elapsed)
    return EXIT_OK


def cmd_benchmark(args, cfg: RunConfig) -> int:
    store = load_store(args.store)
    if args.corpus_dir is not None:
        tasks = {t.id: t for t in read_corpus(args.corpus_dir)}
        test_ids = [store.task_ids[j] for j in store.split.test]
        absent = [i for i in test_ids if i not in tasks]
        if absent:
            raise ValueError(f"corpus lacks test tasks {absent[:3]}")
        F, ok, failed = featurize(tasks, test_ids)
        if failed:
            raise ValueError(f"features failed for {sorted(failed)[:3]}")
        if not np.allclose(F, store.F[store.split.test], rtol=1e-12, atol=0.0):
            log.warning("corpus features differ from the stored features")
    report = benchmark_store(store, mask=not args.no_mask)
    csv_path, txt_path = report.write(args.out)
    sys.stdout.write(report.to_table())
    print(f"wrote {csv_path} and {txt_path}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "label": cmd_label,
    "train": cmd_train,
    "recommend": cmd_recommend,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, ConfigError) as exc:
        print(f"lfselect: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"lfselect: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.verb](args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"lfselect: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AllInfeasible, ValueError, KeyError, OSError) as exc:
        print(f"lfselect: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LFSelectError as exc:
        print(f"lfselect: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"lfselect: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
