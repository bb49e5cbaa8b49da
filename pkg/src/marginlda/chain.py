"""Training chains shared by the binary, multi-task, and regression trainers.

Per-iteration draw order (the documented RNG contract):

1. for each task i in 0..L-1: draw the classifier eta_i from stream
   ``(STREAM_ETA, i)`` given the current assignments and augmentation
   variables;
2. sweep all documents in order, resampling every token from stream
   ``STREAM_SWEEP`` (one uniform per token);
3. for each task i: draw the augmentation vector over non-empty
   documents in document order from ``(STREAM_LAMBDA, i)`` (regression
   additionally draws omega from ``(STREAM_OMEGA, 0)``).

After the burn-in iterations one extra classifier sample per task is
drawn as the snapshot classifier (averaging ``eta_samples`` draws when
configured).  The binary trainer is the single-task instance of the
hinge chain, so its trajectory is bitwise identical to the multi-task
trainer run with L = 1.

Documents with no tokens are skipped by the sweep and excluded from the
classifier posterior and the margin loss; their augmentation variables
keep their initial value 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .corpus import LabeledCorpus
from .kernels import STREAM_ETA, STREAM_LAMBDA, STREAM_OMEGA, STREAM_SWEEP
from .randkit import RngState
from .topic_state import CountState, Hyperparams, init_assignments

__all__ = ["ChainResult", "run_hinge_chain", "run_regression_chain"]


@dataclass
class ChainResult:
    """Final chain state plus the snapshot classifier draws."""

    counts: CountState
    etas: np.ndarray          # (L, K) last within-iteration draw
    eta_hat: np.ndarray       # (L, K) post-burn-in snapshot classifier
    lambdas: np.ndarray       # (L, D), 1.0 for empty documents
    omegas: np.ndarray | None  # (D,) for regression chains
    history: list = field(default_factory=list)   # (iteration, seconds, metric)
    trace: list | None = None                     # (etas, zbars) per iteration


def _hinge_eta_draw(rng, zbars, y, lam, hyper):
    a = 1.0 / lam
    b = hyper.c * y * (lam + hyper.c * hyper.ell) / lam
    return kernels.draw_weight_vector(rng, zbars, a, b, hyper.nu2, hyper.c)


def _regression_eta_draw(rng, zbars, y, lam, om, hyper):
    rho, psi = kernels.regression_aux(y, lam, om, hyper.epsilon)
    return kernels.draw_weight_vector(
        rng, zbars, rho, (hyper.c * hyper.c) * psi, hyper.nu2, hyper.c
    )


def _sweep(state: CountState, etas: np.ndarray, lin, quad, cross, hyper, sweep_rng) -> None:
    # Coefficient rows are aligned with all document indices; rows of
    # empty documents are never read.
    us = sweep_rng.uniform(state.tokens_flat.size)
    kernels.corpus_sweep(
        state.tokens_flat, state.z_flat, state.offsets,
        state.ckt, state.ck, state.cdk,
        etas, lin, quad, cross,
        hyper.alpha_k, hyper.beta_t, state.V * hyper.beta_t, us,
    )


def run_hinge_chain(
    rng: RngState,
    corpus: LabeledCorpus,
    task_labels: np.ndarray,
    config,
    metric_fn=None,
) -> ChainResult:
    """Run the hinge-loss Gibbs chain for ``config.burn_in`` iterations.

    ``task_labels`` is an (L, D) array of labels in {-1, +1}.  The
    binary trainer passes L = 1.
    """
    hyper: Hyperparams = config.hyper
    task_labels = np.asarray(task_labels, dtype=np.float64)
    n_tasks, n_docs = task_labels.shape
    if n_docs != corpus.D:
        raise ValueError("task label columns must match document count")

    state = init_assignments(rng, corpus, hyper.K)
    sweep_rng = rng.child(STREAM_SWEEP)
    eta_rngs = [rng.child(STREAM_ETA, i) for i in range(n_tasks)]
    lam_rngs = [rng.child(STREAM_LAMBDA, i) for i in range(n_tasks)]

    lengths = state.doc_lengths()
    nonempty = lengths > 0
    gamma_all = 1.0 / np.maximum(lengths, 1)
    y_ne = task_labels[:, nonempty]

    lambdas = np.ones((n_tasks, corpus.D))
    etas = np.zeros((n_tasks, hyper.K))
    history: list = []
    trace: list | None = [] if getattr(config, "record_trace", False) else None

    for it in range(config.burn_in):
        t0 = time.perf_counter()
        zb = state.zbar_matrix()[nonempty]
        for i in range(n_tasks):
            etas[i] = _hinge_eta_draw(eta_rngs[i], zb, y_ne[i], lambdas[i, nonempty], hyper)
        lin, quad, cross = kernels.margin_coefs(
            task_labels.T, lambdas.T, gamma_all[:, None], hyper.c, hyper.ell
        )
        _sweep(state, etas, lin, quad, cross, hyper, sweep_rng)
        zb = state.zbar_matrix()[nonempty]
        for i in range(n_tasks):
            zetas = hyper.ell - y_ne[i] * (zb @ etas[i])
            lambdas[i, nonempty] = kernels.draw_inverse_lambda_vec(lam_rngs[i], zetas, hyper.c)
        metric = metric_fn(etas, zb) if metric_fn is not None else float("nan")
        history.append((it + 1, time.perf_counter() - t0, metric))
        if trace is not None:
            trace.append((etas.copy(), zb.copy()))

    zb = state.zbar_matrix()[nonempty]
    n_samples = max(1, int(getattr(config, "eta_samples", 1)))
    eta_hat = np.zeros((n_tasks, hyper.K))
    for i in range(n_tasks):
        draws = [
            _hinge_eta_draw(eta_rngs[i], zb, y_ne[i], lambdas[i, nonempty], hyper)
            for _ in range(n_samples)
        ]
        eta_hat[i] = np.mean(draws, axis=0)

    return ChainResult(
        counts=state, etas=etas, eta_hat=eta_hat, lambdas=lambdas,
        omegas=None, history=history, trace=trace,
    )


def run_regression_chain(
    rng: RngState,
    corpus: LabeledCorpus,
    scores: np.ndarray,
    config,
    metric_fn=None,
) -> ChainResult:
    """Run the dual-augmentation regression chain."""
    hyper: Hyperparams = config.hyper
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (corpus.D,):
        raise ValueError("scores must have one entry per document")

    state = init_assignments(rng, corpus, hyper.K)
    sweep_rng = rng.child(STREAM_SWEEP)
    eta_rng = rng.child(STREAM_ETA, 0)
    lam_rng = rng.child(STREAM_LAMBDA, 0)
    om_rng = rng.child(STREAM_OMEGA, 0)

    lengths = state.doc_lengths()
    nonempty = lengths > 0
    gamma_all = 1.0 / np.maximum(lengths, 1)
    y_ne = scores[nonempty]

    lambdas = np.ones(corpus.D)
    omegas = np.ones(corpus.D)
    eta = np.zeros(hyper.K)
    history: list = []
    trace: list | None = [] if getattr(config, "record_trace", False) else None

    for it in range(config.burn_in):
        t0 = time.perf_counter()
        zb = state.zbar_matrix()[nonempty]
        eta = _regression_eta_draw(
            eta_rng, zb, y_ne, lambdas[nonempty], omegas[nonempty], hyper
        )
        lin, quad, cross = kernels.regression_coefs(
            scores, lambdas, omegas, gamma_all, hyper.c, hyper.epsilon
        )
        _sweep(state, eta[None, :], lin[:, None], quad[:, None], cross[:, None],
               hyper, sweep_rng)
        zb = state.zbar_matrix()[nonempty]
        delta = y_ne - zb @ eta
        lambdas[nonempty] = kernels.draw_inverse_lambda_vec(
            lam_rng, delta - hyper.epsilon, hyper.c
        )
        omegas[nonempty] = kernels.draw_inverse_lambda_vec(
            om_rng, delta + hyper.epsilon, hyper.c
        )
        metric = metric_fn(eta[None, :], zb) if metric_fn is not None else float("nan")
        history.append((it + 1, time.perf_counter() - t0, metric))
        if trace is not None:
            trace.append((eta[None, :].copy(), zb.copy()))

    zb = state.zbar_matrix()[nonempty]
    n_samples = max(1, int(getattr(config, "eta_samples", 1)))
    draws = [
        _regression_eta_draw(eta_rng, zb, y_ne, lambdas[nonempty], omegas[nonempty], hyper)
        for _ in range(n_samples)
    ]
    eta_hat = np.mean(draws, axis=0)[None, :]

    return ChainResult(
        counts=state, etas=eta[None, :], eta_hat=eta_hat, lambdas=lambdas[None, :],
        omegas=omegas, history=history, trace=trace,
    )
