"""Command-line entry points: train, predict, eval, bench.

Configuration precedence: command-line flags override a line-oriented
``key=value`` config file (``--config``), which overrides the built-in
per-task defaults.  Exit codes: 0 success, 1 runtime failure, 2
usage/config/data error.
"""

from __future__ import annotations

import argparse
import math
import statistics
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from .binary import TrainConfig
from .binary import train as train_binary
from .corpus import CorpusFormatError, LabeledCorpus, load_bow
from .metrics import EvalReport, accuracy, predictive_r2, prf1_multilabel
from .multitask import train_multitask, train_one_vs_all
from .persistence import (
    SnapshotFormatError,
    is_ova_manifest,
    load_one_vs_all,
    load_snapshot,
    save_one_vs_all,
    save_snapshot,
)
from .predict import TestInferenceConfig, format_prediction, predict_corpus
from .randkit import RngState
from .regression import select_c_by_cv, train_regression
from .synth import binary_corpus, multiclass_corpus
from .topic_state import Hyperparams

TASK_CHOICES = ("binary", "multiclass", "multiclass-ova", "multilabel", "regression")

# Paper-anchored defaults per task: (ell, burn_in).
_TASK_DEFAULTS = {
    "binary": (164.0, 10),
    "multiclass": (64.0, 20),
    "multiclass-ova": (64.0, 20),
    "multilabel": (64.0, 40),
    "regression": (1.0, 10),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    task: str
    data: str | None = None
    test: str | None = None
    out: str | None = None
    topics: int | None = None
    alpha: float = 1.0
    beta: float = 0.01
    c: str = "1"
    ell: float | None = None
    epsilon: float = 1e-3
    burnin: int | None = None
    seed: int = 0
    samples: int = 1
    workers: int = 1
    runs: int = 1
    nu2: float = 1.0
    eta_samples: int = 1

    def resolved(self) -> "RunConfig":
        ell, burnin = _TASK_DEFAULTS[self.task]
        return replace(
            self,
            ell=self.ell if self.ell is not None else ell,
            burnin=self.burnin if self.burnin is not None else burnin,
        )

    def hyper(self, c_value: float) -> Hyperparams:
        if self.topics is None:
            raise UsageError("--topics is required")
        return Hyperparams.with_scalar_alpha(
            K=self.topics,
            alpha=self.alpha,
            beta_t=self.beta,
            nu2=self.nu2,
            c=c_value,
            ell=self.ell,
            epsilon=self.epsilon,
        )


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                values[key] = value
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    return values


_FIELD_TYPES = {
    "task": str, "data": str, "test": str, "out": str,
    "topics": int, "alpha": float, "beta": float, "c": str,
    "ell": float, "epsilon": float, "burnin": int, "seed": int,
    "samples": int, "workers": int, "runs": int,
    "nu2": float, "eta_samples": int,
}


def _build_run_config(args, task_required: bool = True) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        for key, raw in _read_config_file(args.config).items():
            if key not in _FIELD_TYPES:
                raise UsageError(f"unknown config key {key!r}")
            try:
                values[key] = _FIELD_TYPES[key](raw)
            except ValueError:
                raise UsageError(f"config key {key!r}: cannot parse {raw!r}") from None
    for key in _FIELD_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    task = values.get("task")
    if task is None:
        if task_required:
            raise UsageError("--task is required")
        values["task"] = "binary"
    elif task not in TASK_CHOICES:
        raise UsageError(f"unknown task {task!r} (choose from {', '.join(TASK_CHOICES)})")
    return RunConfig(**values).resolved()


def _base_task(task: str) -> str:
    return "multiclass" if task == "multiclass-ova" else task


def _load_corpus(path: str, task: str) -> LabeledCorpus:
    fmt = "uci-bow" if path.endswith((".uci", ".bow")) else "svmlight-counts"
    return load_bow(path, fmt, task=_base_task(task))


def _n_categories(corpus: LabeledCorpus) -> int:
    if corpus.task == "multiclass":
        return int(max(corpus.responses)) + 1
    cats = set()
    for s in corpus.responses:
        cats.update(s)
    if not cats:
        raise UsageError("multilabel corpus has no categories")
    return int(max(cats)) + 1


def _write_history(history, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration\tseconds\ttrain_metric\n")
        for iteration, seconds, metric in history:
            fh.write(f"{iteration}\t{seconds:.6f}\t{metric:.6g}\n")


def _train_once(cfg: RunConfig, corpus: LabeledCorpus, seed: int, out: str):
    if cfg.c == "cv":
        if cfg.task != "regression":
            raise UsageError("--c cv is only available for regression")
        base = TrainConfig(burn_in=cfg.burnin, hyper=cfg.hyper(1.0), seed=seed,
                           eta_samples=cfg.eta_samples)
        c_value = select_c_by_cv(corpus, base)
        print(f"cross-validated c\t{c_value:g}")
    else:
        try:
            c_value = float(cfg.c)
        except ValueError:
            raise UsageError(f"--c must be a number or 'cv', got {cfg.c!r}") from None
    config = TrainConfig(
        burn_in=cfg.burnin, hyper=cfg.hyper(c_value), seed=seed,
        eta_samples=cfg.eta_samples,
    )
    rng = RngState(seed)
    if cfg.task == "binary":
        state, snapshot = train_binary(rng, corpus, config)
        history = state.history
        save_snapshot(snapshot, out)
    elif cfg.task == "regression":
        state, snapshot = train_regression(rng, corpus, config)
        history = state.history
        save_snapshot(snapshot, out)
    elif cfg.task in ("multiclass", "multilabel"):
        state, snapshot = train_multitask(rng, corpus, _n_categories(corpus), config)
        history = state.history
        save_snapshot(snapshot, out)
    else:  # multiclass-ova
        snapshots, histories = train_one_vs_all(
            rng, corpus, _n_categories(corpus), config, parallelism=cfg.workers,
            return_histories=True,
        )
        # Log rows average the per-task iteration times and train accuracies.
        history = [
            (
                it + 1,
                float(np.mean([h[it][1] for h in histories])),
                float(np.mean([h[it][2] for h in histories])),
            )
            for it in range(min((len(h) for h in histories), default=0))
        ]
        save_one_vs_all(snapshots, out)
    _write_history(history, out + ".log")
    final_metric = history[-1][2] if history else float("nan")
    return final_metric


def cmd_train(args) -> int:
    cfg = _build_run_config(args)
    if cfg.data is None or cfg.out is None:
        raise UsageError("train requires --data and --out")
    corpus = _load_corpus(cfg.data, cfg.task)
    if corpus.responses is None:
        raise UsageError(
            "corpus has no labels; supervised training needs svmlight-counts input"
        )
    metrics = []
    for r in range(cfg.runs):
        out = cfg.out if cfg.runs == 1 else f"{cfg.out}.run{r}"
        metric = _train_once(cfg, corpus, cfg.seed + r, out)
        metrics.append(metric)
        print(f"run {r}\tseed {cfg.seed + r}\tfinal_train_metric\t{metric:.6g}\t{out}")
    if cfg.runs > 1:
        clean = [m for m in metrics if not math.isnan(m)]
        if clean:
            mean = statistics.fmean(clean)
            std = statistics.pstdev(clean) if len(clean) > 1 else 0.0
            print(f"train_metric_mean\t{mean:.6g}")
            print(f"train_metric_std\t{std:.6g}")
    return 0


def _file_has_documents(path: str) -> bool:
    with open(path, "r", encoding="utf-8") as fh:
        return any(line.split("#", 1)[0].strip() for line in fh)


def cmd_predict(args) -> int:
    cfg = _build_run_config(args, task_required=False)
    if cfg.data is None or cfg.test is None or cfg.out is None:
        raise UsageError("predict requires --data (snapshot), --test, and --out")
    if is_ova_manifest(cfg.data):
        snapshot = load_one_vs_all(cfg.data)
        task_kind = "multiclass"
    else:
        snapshot = load_snapshot(cfg.data)
        task_kind = snapshot.task_kind
    if not _file_has_documents(cfg.test):
        open(cfg.out, "w").close()
        return 0
    corpus = _load_corpus(cfg.test, task_kind)
    infer = TestInferenceConfig(n_samples=cfg.samples)
    preds = predict_corpus(snapshot, corpus, infer, seed=cfg.seed)
    with open(cfg.out, "w", encoding="utf-8") as fh:
        for doc, pred in zip(corpus.docs, preds):
            fh.write(f"{doc.doc_id}\t{format_prediction(pred, task_kind)}\n")
    return 0


def _parse_prediction(text: str, task: str):
    if task == "binary":
        if text not in ("+1", "-1"):
            raise UsageError(f"bad binary prediction {text!r}")
        return 1 if text == "+1" else -1
    if task == "multiclass":
        return int(text)
    if task == "multilabel":
        return frozenset(int(p) for p in text.split(",") if p != "")
    return float(text)


def cmd_eval(args) -> int:
    cfg_task = _base_task(args.task) if args.task else None
    if cfg_task is None:
        raise UsageError("eval requires --task")
    preds = []
    with open(args.predictions, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            value = parts[1] if len(parts) > 1 else ""
            preds.append(_parse_prediction(value, cfg_task))
    truth_corpus = _load_corpus(args.truth, cfg_task)
    if len(preds) != truth_corpus.D:
        raise UsageError(
            f"prediction count {len(preds)} does not match truth document count {truth_corpus.D}"
        )
    truth = list(truth_corpus.responses)
    report = EvalReport()
    if cfg_task in ("binary", "multiclass"):
        report.values["accuracy"] = accuracy(preds, truth)
    elif cfg_task == "multilabel":
        precision, recall, f1 = prf1_multilabel(preds, truth)
        report.values.update(precision=precision, recall=recall, f1=f1)
        tp = sum(len(frozenset(p) & t) for p, t in zip(preds, truth))
        fp = sum(len(frozenset(p) - t) for p, t in zip(preds, truth))
        fn = sum(len(t - frozenset(p)) for p, t in zip(preds, truth))
        report.counts.update(tp=tp, fp=fp, fn=fn)
    else:
        report.values["predictive_r2"] = predictive_r2(preds, truth)
    for line in report.lines():
        print(line)
    return 0


def _median_iteration_seconds(history) -> float:
    secs = [s for _, s, _ in history[1:]] or [s for _, s, _ in history]
    return statistics.median(secs)


def cmd_bench(args) -> int:
    cfg = _build_run_config(args, task_required=False)
    topics = cfg.topics or 8
    sizes = [int(s) for s in args.sizes] if args.sizes else [8000, 16000, 32000]
    print("bench\tparameter\tvalue\tseconds_per_iteration")
    hyper = Hyperparams.with_scalar_alpha(K=topics, alpha=cfg.alpha, beta_t=cfg.beta,
                                          ell=164.0)
    for size in sizes:
        corpus = binary_corpus(cfg.seed, n_docs=max(4, size // 60), n_per_doc=60)
        config = TrainConfig(burn_in=4, hyper=hyper, seed=cfg.seed)
        state, _ = train_binary(RngState(cfg.seed), corpus, config)
        print(f"scaling\tN_total\t{corpus.n_total}\t{_median_iteration_seconds(state.history):.6f}")
    for k in (topics, 2 * topics):
        corpus = binary_corpus(cfg.seed, n_docs=max(4, sizes[0] // 60), n_per_doc=60)
        hk = Hyperparams.with_scalar_alpha(K=k, alpha=cfg.alpha, beta_t=cfg.beta, ell=164.0)
        config = TrainConfig(burn_in=4, hyper=hk, seed=cfg.seed)
        state, _ = train_binary(RngState(cfg.seed), corpus, config)
        print(f"scaling\ttopics\t{k}\t{_median_iteration_seconds(state.history):.6f}")
    n_tasks = 8
    corpus = multiclass_corpus(cfg.seed, n_docs=max(n_tasks, sizes[0] // 50),
                               n_classes=n_tasks, n_per_doc=50, V=400)
    hl = Hyperparams.with_scalar_alpha(K=n_tasks, alpha=cfg.alpha, beta_t=cfg.beta, ell=64.0)
    config = TrainConfig(burn_in=4, hyper=hl, seed=cfg.seed)
    for workers in sorted({1, cfg.workers}):
        t0 = time.perf_counter()
        train_one_vs_all(RngState(cfg.seed), corpus, n_tasks, config, parallelism=workers)
        elapsed = time.perf_counter() - t0
        print(f"one_vs_all\tworkers\t{workers}\t{elapsed:.6f}")
    return 0


def _add_common_flags(sub) -> None:
    sub.add_argument("--task", choices=TASK_CHOICES)
    sub.add_argument("--data")
    sub.add_argument("--test")
    sub.add_argument("--topics", type=int)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--c")
    sub.add_argument("--ell", type=float)
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--burnin", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--samples", type=int)
    sub.add_argument("--workers", type=int)
    sub.add_argument("--runs", type=int)
    sub.add_argument("--out")
    sub.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marginlda",
        description="Max-margin supervised topic models via collapsed Gibbs sampling",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("train", cmd_train), ("predict", cmd_predict), ("bench", cmd_bench)):
        sub = subs.add_parser(name)
        _add_common_flags(sub)
        if name == "bench":
            sub.add_argument("sizes", nargs="*", help="approximate token counts to time")
        sub.set_defaults(fn=fn)
    ev = subs.add_parser("eval")
    ev.add_argument("predictions")
    ev.add_argument("truth")
    ev.add_argument("--task", choices=TASK_CHOICES)
    ev.set_defaults(fn=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, CorpusFormatError, SnapshotFormatError, FileNotFoundError,
            IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
