"""Point-estimated topics, test-document inference, and prediction rules.

Test documents are folded in by Gibbs sampling against the fixed topic
point estimate: sweeps run until the relative change of the document's
data likelihood drops below a tolerance (or a sweep cap), then one or
more topic-proportion samples from consecutive sweeps are averaged and
fed to the task's latent prediction rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .corpus import Document, LabeledCorpus
from .kernels import STREAM_PREDICT
from .randkit import RngState
from .topic_state import CountState, Hyperparams

__all__ = [
    "ModelSnapshot",
    "TestInferenceConfig",
    "estimate_phi_hat",
    "heldout_token_conditional",
    "infer_test_topics",
    "infer_corpus_zbars",
    "discriminant",
    "predict_binary",
    "predict_multiclass",
    "predict_multilabel",
    "predict_regression",
    "predict_corpus",
    "format_prediction",
]


@dataclass(frozen=True)
class ModelSnapshot:
    """Everything prediction needs: topics, classifiers, and provenance."""

    phi_hat: np.ndarray      # (K, V) row-stochastic
    etas: np.ndarray         # (L, K); L = 1 for binary and regression
    hyper: Hyperparams
    task_kind: str           # binary | multiclass | multilabel | regression
    seed: int = 0
    burn_in: int = 0

    @property
    def K(self) -> int:
        return int(self.phi_hat.shape[0])

    @property
    def V(self) -> int:
        return int(self.phi_hat.shape[1])

    @property
    def L(self) -> int:
        return int(self.etas.shape[0])


@dataclass(frozen=True)
class TestInferenceConfig:
    """Stopping rule and sample count for test-document inference."""

    __test__ = False  # keep pytest from collecting this as a test class

    max_iterations: int = 100
    likelihood_rel_tol: float = 1e-4
    n_samples: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


def estimate_phi_hat(counts: CountState, beta_t: float) -> np.ndarray:
    """Posterior-mean topic estimate: row k proportional to counts + beta."""
    num = counts.ckt + beta_t
    return num / num.sum(axis=1, keepdims=True)


@njit(cache=True, nogil=True)
def _test_sweep(tokens, z, row, phi, alpha_k, us):
    n = tokens.shape[0]
    n_topics = phi.shape[0]
    w = np.empty(n_topics)
    for j in range(n):
        t = tokens[j]
        row[z[j]] -= 1
        tot = 0.0
        for k in range(n_topics):
            w[k] = phi[k, t] * (row[k] + alpha_k)
            tot += w[k]
        u = us[j] * tot
        k_new = n_topics - 1
        acc = 0.0
        for k in range(n_topics - 1):
            acc += w[k]
            if u < acc:
                k_new = k
                break
        row[k_new] += 1
        z[j] = k_new


def heldout_token_conditional(
    phi_hat: np.ndarray, topic_counts: np.ndarray, t: int, alpha_k: float
) -> np.ndarray:
    """Unnormalized conditional for one excluded test token:
    phi_hat[k, t] * (counts_k + alpha_k)."""
    return phi_hat[:, t] * (topic_counts + alpha_k)


def _doc_log_likelihood(phi_hat, tokens, row, alpha_k) -> float:
    theta = (row + alpha_k) / (row.sum() + phi_hat.shape[0] * alpha_k)
    return float(np.log(theta @ phi_hat[:, tokens]).sum())


def infer_test_topics(
    rng: RngState,
    phi_hat: np.ndarray,
    doc: Document,
    hyper: Hyperparams,
    config: TestInferenceConfig,
) -> np.ndarray:
    """Infer a test document's topic proportions under fixed topics.

    Starts from uniform-random assignments, sweeps until the relative
    change of the data likelihood falls below the tolerance (or the
    sweep cap), then averages ``n_samples`` topic-proportion samples
    taken from consecutive sweeps.  Empty documents get the uniform
    vector.
    """
    tokens = doc.tokens
    n_topics = phi_hat.shape[0]
    if tokens.size == 0:
        return np.full(n_topics, 1.0 / n_topics)
    if int(tokens.max()) >= phi_hat.shape[1]:
        raise ValueError("test document contains tokens outside the model vocabulary")
    z = rng.integers(0, n_topics, size=tokens.size).astype(np.int32)
    row = np.bincount(z, minlength=n_topics).astype(np.int64)
    loglik = _doc_log_likelihood(phi_hat, tokens, row, hyper.alpha_k)
    for _ in range(config.max_iterations):
        us = rng.uniform(tokens.size)
        _test_sweep(tokens, z, row, phi_hat, hyper.alpha_k, us)
        new_loglik = _doc_log_likelihood(phi_hat, tokens, row, hyper.alpha_k)
        if abs(new_loglik - loglik) <= config.likelihood_rel_tol * abs(loglik):
            break
        loglik = new_loglik
    zb = row / tokens.size
    for _ in range(config.n_samples - 1):
        us = rng.uniform(tokens.size)
        _test_sweep(tokens, z, row, phi_hat, hyper.alpha_k, us)
        zb = zb + row / tokens.size
    return zb / config.n_samples


def infer_corpus_zbars(
    rng: RngState,
    snapshot: ModelSnapshot,
    corpus: LabeledCorpus,
    config: TestInferenceConfig,
    stream_key: tuple[int, ...] = (),
) -> np.ndarray:
    """Topic proportions for every document, one child stream per document."""
    out = np.empty((corpus.D, snapshot.K))
    for d, doc in enumerate(corpus.docs):
        doc_rng = rng.child(STREAM_PREDICT, d, *stream_key)
        out[d] = infer_test_topics(doc_rng, snapshot.phi_hat, doc, snapshot.hyper, config)
    return out


def discriminant(eta_i: np.ndarray, zbar: np.ndarray) -> float:
    if eta_i.shape != zbar.shape:
        raise ValueError("classifier and topic-proportion dimensions differ")
    return float(eta_i @ zbar)


def predict_binary(snapshot: ModelSnapshot, zbar: np.ndarray) -> int:
    """Sign of the discriminant; exact zero maps to +1."""
    return 1 if discriminant(snapshot.etas[0], zbar) >= 0.0 else -1


def predict_multiclass(snapshot, zbar) -> int:
    """Category with the largest discriminant; ties go to the lowest index.

    Accepts either a multi-task snapshot with a shared ``zbar`` or a
    list of one-vs-all snapshots with a matching list of per-task
    topic-proportion vectors.
    """
    if isinstance(snapshot, (list, tuple)):
        scores = np.array(
            [discriminant(s.etas[0], zb) for s, zb in zip(snapshot, zbar)]
        )
    else:
        scores = snapshot.etas @ zbar
    return int(np.argmax(scores))


def predict_multilabel(snapshot: ModelSnapshot, zbar: np.ndarray) -> frozenset:
    """Categories with strictly positive discriminants."""
    scores = snapshot.etas @ zbar
    return frozenset(int(i) for i in np.nonzero(scores > 0.0)[0])


def predict_regression(snapshot: ModelSnapshot, zbar: np.ndarray) -> float:
    return discriminant(snapshot.etas[0], zbar)


def predict_corpus(
    snapshot,
    corpus: LabeledCorpus,
    config: TestInferenceConfig,
    seed: int,
) -> list:
    """Predict every document of a corpus.

    ``snapshot`` is a single ModelSnapshot, or a list of one-vs-all
    binary snapshots (multiclass): the one-vs-all path infers a
    separate topic-proportion vector per task, as each binary model has
    its own topics.
    """
    root = RngState(seed)
    if isinstance(snapshot, (list, tuple)):
        per_task = [
            infer_corpus_zbars(root, s, corpus, config, stream_key=(i,))
            for i, s in enumerate(snapshot)
        ]
        return [
            predict_multiclass(list(snapshot), [zb[d] for zb in per_task])
            for d in range(corpus.D)
        ]
    zbars = infer_corpus_zbars(root, snapshot, corpus, config)
    kind = snapshot.task_kind
    if kind == "binary":
        return [predict_binary(snapshot, zb) for zb in zbars]
    if kind == "multiclass":
        return [predict_multiclass(snapshot, zb) for zb in zbars]
    if kind == "multilabel":
        return [predict_multilabel(snapshot, zb) for zb in zbars]
    if kind == "regression":
        return [predict_regression(snapshot, zb) for zb in zbars]
    raise ValueError(f"unknown task kind: {kind!r}")


def format_prediction(pred, task_kind: str) -> str:
    """Render one prediction for the line-oriented output file."""
    if task_kind == "binary":
        return "+1" if pred > 0 else "-1"
    if task_kind == "multiclass":
        return str(int(pred))
    if task_kind == "multilabel":
        return ",".join(str(c) for c in sorted(pred))
    return f"{pred:.12g}"
