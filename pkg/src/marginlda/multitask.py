"""Multiple binary Gibbs classifiers sharing one topic representation,
plus the one-vs-all driver.

Multi-class and multi-label problems reduce to L binary tasks: one task
per category with labels +1 where the category applies and -1
otherwise.  The multi-task trainer couples the tasks through a shared
count state; the one-vs-all driver instead trains L fully independent
binary models (each with its own topics) and can do so in parallel,
since every task owns a keyed random stream and no mutable state is
shared.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .binary import TrainConfig, eta_posterior
from .chain import run_hinge_chain
from .corpus import LabeledCorpus
from .kernels import STREAM_OVA
from .predict import ModelSnapshot, estimate_phi_hat
from .randkit import RngState, sample_mvn
from .topic_state import CountState, Hyperparams

__all__ = [
    "MultiTaskState",
    "labels_from_multiclass",
    "labels_from_multilabel",
    "task_labels_for",
    "eta_posterior_task",
    "draw_eta_task",
    "token_conditional_mt",
    "draw_lambda_mt",
    "train_on_task_labels",
    "train_multitask",
    "train_one_vs_all",
]


@dataclass
class MultiTaskState:
    etas: np.ndarray             # (L, K)
    lambdas: np.ndarray          # (L, D) all > 0
    counts: CountState
    task_labels: np.ndarray      # (L, D) in {-1, +1}
    history: list = field(default_factory=list)
    trace: list | None = None


def labels_from_multiclass(responses, n_tasks: int) -> np.ndarray:
    """(L, D) matrix with +1 exactly where the document's category is i."""
    cats = np.asarray(list(responses), dtype=np.int64)
    if cats.size and (cats.min() < 0 or cats.max() >= n_tasks):
        raise ValueError("category index outside [0, L)")
    labels = -np.ones((n_tasks, cats.size))
    labels[cats, np.arange(cats.size)] = 1.0
    return labels


def labels_from_multilabel(responses, n_tasks: int) -> np.ndarray:
    """(L, D) matrix with +1 where category i is in the document's label set."""
    responses = list(responses)
    labels = -np.ones((n_tasks, len(responses)))
    for d, cats in enumerate(responses):
        for c in cats:
            if not 0 <= c < n_tasks:
                raise ValueError("category index outside [0, L)")
            labels[c, d] = 1.0
    return labels


def task_labels_for(corpus: LabeledCorpus, n_tasks: int) -> np.ndarray:
    if corpus.responses is None:
        raise ValueError("corpus has no responses")
    if corpus.task == "multiclass":
        return labels_from_multiclass(corpus.responses, n_tasks)
    if corpus.task == "multilabel":
        return labels_from_multilabel(corpus.responses, n_tasks)
    if corpus.task == "binary" and n_tasks == 1:
        return np.asarray(corpus.responses, dtype=np.float64)[None, :]
    raise ValueError(f"cannot derive {n_tasks} task labels from task {corpus.task!r}")


def eta_posterior_task(counts: CountState, lambdas_i, task_labels_i, hyper: Hyperparams):
    """Gaussian conditional of one task's classifier; the single-task
    case coincides with the binary trainer's posterior."""
    return eta_posterior(counts, lambdas_i, task_labels_i, hyper)


def draw_eta_task(
    rng: RngState, counts: CountState, lambdas_i, task_labels_i, hyper: Hyperparams
) -> np.ndarray:
    mu, sigma = eta_posterior_task(counts, lambdas_i, task_labels_i, hyper)
    return sample_mvn(rng, mu, sigma)


def token_conditional_mt(
    counts: CountState,
    etas: np.ndarray,
    lambdas_col_d,
    task_labels_col_d,
    hyper: Hyperparams,
    d: int,
    n: int,
) -> np.ndarray:
    """Unnormalized multi-task conditional for excluded token (d, n):
    the collapsed-LDA factor times the product of per-task margin
    factors (each with the same leading-c linear term as the binary
    conditional)."""
    n_d = counts.doc_len(d)
    gamma = 1.0 / n_d
    lin, quad, cross = kernels.margin_coefs(
        np.asarray(task_labels_col_d, dtype=np.float64),
        np.asarray(lambdas_col_d, dtype=np.float64),
        gamma,
        hyper.c,
        hyper.ell,
    )
    inv_nm1 = 1.0 / (n_d - 1) if n_d > 1 else 0.0
    w = np.empty(counts.K)
    kernels.token_weights(
        counts.ckt,
        counts.ck,
        counts.cdk[d],
        int(counts.tokens[d][n]),
        np.asarray(etas, dtype=np.float64),
        lin,
        quad,
        cross,
        inv_nm1,
        hyper.alpha_k,
        hyper.beta_t,
        counts.V * hyper.beta_t,
        w,
    )
    return w


def draw_lambda_mt(rng: RngState, zeta_d_i: float, c: float) -> float:
    if c <= 0:
        raise ValueError("c must be positive to draw augmentation variables")
    return float(kernels.draw_inverse_lambda_vec(rng, np.asarray(zeta_d_i, dtype=np.float64), c))


def _multiclass_accuracy(cats_nonempty: np.ndarray):
    def metric(etas, zbars):
        pred = np.argmax(zbars @ etas.T, axis=1)
        return float(np.mean(pred == cats_nonempty))

    return metric


def _multilabel_micro_f1(labels_nonempty: np.ndarray):
    def metric(etas, zbars):
        scores = zbars @ etas.T          # (D, L)
        pred = scores > 0.0
        truth = labels_nonempty.T > 0.0
        tp = np.sum(pred & truth)
        fp = np.sum(pred & ~truth)
        fn = np.sum(~pred & truth)
        if tp == 0:
            return 0.0
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        return float(2.0 * precision * recall / (precision + recall))

    return metric


def train_on_task_labels(
    rng: RngState,
    corpus: LabeledCorpus,
    task_labels: np.ndarray,
    config: TrainConfig,
    task_kind: str = "multiclass",
    metric_fn=None,
) -> tuple[MultiTaskState, ModelSnapshot]:
    """Shared-topics trainer on explicit (L, D) task labels."""
    task_labels = np.asarray(task_labels, dtype=np.float64)
    result = run_hinge_chain(rng, corpus, task_labels, config, metric_fn=metric_fn)
    state = MultiTaskState(
        etas=result.eta_hat,
        lambdas=result.lambdas,
        counts=result.counts,
        task_labels=task_labels,
        history=result.history,
        trace=result.trace,
    )
    snapshot = ModelSnapshot(
        phi_hat=estimate_phi_hat(result.counts, config.hyper.beta_t),
        etas=result.eta_hat.copy(),
        hyper=config.hyper,
        task_kind=task_kind,
        seed=config.seed,
        burn_in=config.burn_in,
    )
    return state, snapshot


def train_multitask(
    rng: RngState, corpus: LabeledCorpus, n_tasks: int, config: TrainConfig
) -> tuple[MultiTaskState, ModelSnapshot]:
    """Train L coupled binary classifiers on one shared topic state."""
    task_labels = task_labels_for(corpus, n_tasks)
    lengths = np.array([len(d) for d in corpus.docs])
    metric_fn = None
    if corpus.task == "multiclass":
        cats = np.asarray(corpus.responses, dtype=np.int64)[lengths > 0]
        metric_fn = _multiclass_accuracy(cats)
    elif corpus.task == "multilabel":
        metric_fn = _multilabel_micro_f1(task_labels[:, lengths > 0])
    kind = corpus.task if corpus.task in ("multiclass", "multilabel") else "multiclass"
    return train_on_task_labels(
        rng, corpus, task_labels, config, task_kind=kind, metric_fn=metric_fn
    )


def _binary_view(corpus: LabeledCorpus, labels_row: np.ndarray) -> LabeledCorpus:
    return LabeledCorpus(
        vocab=corpus.vocab,
        docs=corpus.docs,
        responses=tuple(int(v) for v in labels_row),
        task="binary",
    )


def _ova_task(args):
    corpus, labels_row, config, seed, spawn_key = args
    from .binary import train as train_binary

    task_rng = RngState(seed, spawn_key)
    state, snapshot = train_binary(task_rng, _binary_view(corpus, labels_row), config)
    return snapshot, state.history


def train_one_vs_all(
    rng: RngState,
    corpus: LabeledCorpus,
    n_tasks: int,
    config: TrainConfig,
    parallelism: int = 1,
    return_histories: bool = False,
):
    """Train L independent binary models, one per category.

    Task i trains from the keyed stream ``(STREAM_OVA, i)``, so the
    per-task snapshots are identical for any worker count.  Workers are
    threads: the token sweeps release the GIL inside the compiled
    kernels, and threads share the (immutable) corpus instead of
    pickling it per task.  Returns the list of per-task snapshots (and
    the per-task iteration histories when ``return_histories``).
    """
    if n_tasks < 2:
        raise ValueError("one-vs-all needs at least 2 tasks")
    task_labels = task_labels_for(corpus, n_tasks)
    jobs = []
    for i in range(n_tasks):
        task_rng_key = rng.spawn_key + (STREAM_OVA, i)
        jobs.append((corpus, task_labels[i], config, rng.seed, task_rng_key))
    if parallelism <= 1:
        results = [_ova_task(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_ova_task, jobs))
    snapshots = [snap for snap, _ in results]
    if return_histories:
        return snapshots, [hist for _, hist in results]
    return snapshots
