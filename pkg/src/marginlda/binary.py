"""Binary max-margin topic classifier trained by collapsed Gibbs sampling.

Each burn-in iteration draws the classifier from its Gaussian
conditional, resamples every token from the supervised collapsed
conditional, and redraws the per-document augmentation variables from
reciprocal inverse-Gaussian conditionals.  After burn-in a final
classifier sample becomes the snapshot used for prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .chain import run_hinge_chain
from .corpus import LabeledCorpus
from .predict import ModelSnapshot, estimate_phi_hat
from .randkit import RngState, sample_mvn
from .topic_state import CountState, Hyperparams

__all__ = [
    "TrainConfig",
    "BinaryModelState",
    "compute_zeta",
    "eta_posterior",
    "draw_eta",
    "supervised_token_conditional",
    "draw_lambda",
    "train",
    "expected_hinge",
]


@dataclass(frozen=True)
class TrainConfig:
    """Burn-in length, hyperparameters, and provenance seed.

    ``seed`` is recorded in snapshots; callers keep it consistent with
    the RngState they pass to the trainer.  ``eta_samples`` controls how
    many post-burn-in classifier draws are averaged into the snapshot
    (one, by default).  ``record_trace`` retains per-iteration
    (classifier, topic-proportion) samples for diagnostics.
    """

    burn_in: int
    hyper: Hyperparams
    seed: int = 0
    eta_samples: int = 1
    record_trace: bool = False

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn-in must be >= 0")


@dataclass
class BinaryModelState:
    eta: np.ndarray              # (K,)
    lambda_: np.ndarray          # (D,) all > 0; 1.0 for empty documents
    counts: CountState
    zeta: np.ndarray             # (D,) margins at the final state (nan for empty docs)
    history: list = field(default_factory=list)
    trace: list | None = None


def compute_zeta(eta: np.ndarray, zbar_d: np.ndarray, y_d: float, ell: float) -> float:
    """Margin slack ell - y * (eta . zbar)."""
    return float(ell - y_d * (eta @ zbar_d))


def eta_posterior(counts: CountState, lam: np.ndarray, labels, hyper: Hyperparams):
    """Mean and covariance of the classifier conditional.

    Precision nu^-2 I + c^2 sum_d zbar_d zbar_d^T / lambda_d with linear
    term c sum_d y_d (lambda_d + c ell) / lambda_d zbar_d; empty
    documents are excluded from both sums.
    """
    lengths = counts.doc_lengths()
    mask = lengths > 0
    zb = counts.zbar_matrix()[mask]
    lam = np.asarray(lam, dtype=np.float64)[mask]
    y = np.asarray(labels, dtype=np.float64)[mask]
    a = 1.0 / lam
    b = hyper.c * y * (lam + hyper.c * hyper.ell) / lam
    return kernels.weight_posterior(zb, a, b, hyper.nu2, hyper.c)


def draw_eta(
    rng: RngState, counts: CountState, lam: np.ndarray, labels, hyper: Hyperparams
) -> np.ndarray:
    """One classifier sample from the Gaussian conditional."""
    mu, sigma = eta_posterior(counts, lam, labels, hyper)
    return sample_mvn(rng, mu, sigma)


def supervised_token_conditional(
    counts: CountState,
    eta: np.ndarray,
    lambda_d: float,
    y_d: float,
    hyper: Hyperparams,
    d: int,
    n: int,
) -> np.ndarray:
    """Unnormalized supervised conditional for excluded token (d, n).

    The collapsed-LDA factor is multiplied by the margin factor
    exp(c gamma y (c ell + lambda) eta_k / lambda
        - c^2 (gamma^2 eta_k^2 + 2 gamma (1-gamma) eta_k Lambda) / (2 lambda)),
    where gamma = 1/N_d and Lambda is the document's discriminant value
    without the excluded word (zero for single-token documents).  The
    leading c on the linear term comes from expanding the augmented
    likelihood; the weights are overflow-guarded by max-subtraction.
    """
    n_d = counts.doc_len(d)
    gamma = 1.0 / n_d
    lin, quad, cross = kernels.margin_coefs(
        np.array([y_d], dtype=np.float64),
        np.array([lambda_d], dtype=np.float64),
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
        np.asarray(eta, dtype=np.float64)[None, :],
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


def draw_lambda(rng: RngState, zeta_d: float, c: float) -> float:
    """Augmentation draw: 1/x with x ~ IG(1/(c |zeta|), 1), clamped near 0."""
    if c <= 0:
        raise ValueError("c must be positive to draw augmentation variables")
    return float(kernels.draw_inverse_lambda_vec(rng, np.asarray(zeta_d, dtype=np.float64), c))


def _train_accuracy(task_labels: np.ndarray):
    def metric(etas, zbars):
        pred = np.where(zbars @ etas[0] >= 0.0, 1.0, -1.0)
        return float(np.mean(pred == task_labels))

    return metric


def train(
    rng: RngState, corpus: LabeledCorpus, config: TrainConfig
) -> tuple[BinaryModelState, ModelSnapshot]:
    """Train on a binary-labeled corpus; returns final state and snapshot."""
    if corpus.task != "binary" or corpus.responses is None:
        raise ValueError("binary training requires a corpus with binary responses")
    y = np.array(corpus.responses, dtype=np.float64)
    lengths = np.array([len(d) for d in corpus.docs])
    result = run_hinge_chain(
        rng, corpus, y[None, :], config, metric_fn=_train_accuracy(y[lengths > 0])
    )
    zb_all = result.counts.zbar_matrix()
    zeta = np.where(
        lengths > 0, config.hyper.ell - y * (zb_all @ result.eta_hat[0]), np.nan
    )
    state = BinaryModelState(
        eta=result.eta_hat[0],
        lambda_=result.lambdas[0],
        counts=result.counts,
        zeta=zeta,
        history=result.history,
        trace=result.trace,
    )
    snapshot = ModelSnapshot(
        phi_hat=estimate_phi_hat(result.counts, config.hyper.beta_t),
        etas=result.eta_hat.copy(),
        hyper=config.hyper,
        task_kind="binary",
        seed=config.seed,
        burn_in=config.burn_in,
    )
    return state, snapshot


def expected_hinge(samples, labels, ell: float) -> float:
    """Monte-Carlo expected hinge loss over posterior samples.

    ``samples`` is an iterable of (eta, zbars) pairs with zbars aligned
    to ``labels``; each contributes sum_d max(0, ell - y_d eta.zbar_d).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one posterior sample")
    y = np.asarray(labels, dtype=np.float64)
    total = 0.0
    for eta, zbars in samples:
        eta_vec = np.asarray(eta, dtype=np.float64).reshape(-1)
        zeta = ell - y * (zbars @ eta_vec)
        total += float(np.maximum(0.0, zeta).sum())
    return total / len(samples)
