"""Collapsed sufficient statistics for topic assignments.

``CountState`` keeps the topic assignment of every token together with
the dense count matrices the collapsed conditionals need: topic-term
counts, their row sums, and document-topic counts.  Token-level updates
are O(1); rebuilding the counts from the assignments must reproduce the
incremental state exactly, which the test suite checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .corpus import LabeledCorpus
from .kernels import STREAM_INIT, STREAM_SWEEP
from .randkit import RngState

__all__ = [
    "Hyperparams",
    "CountState",
    "init_assignments",
    "lda_token_conditional",
    "run_lda_baseline",
    "zbar",
]


@dataclass(frozen=True)
class Hyperparams:
    """Model hyperparameters.

    ``alpha_k`` is the per-topic Dirichlet weight, i.e. alpha / K for a
    symmetric prior parameterized by the scalar alpha the CLI exposes.
    ``c`` is the margin regularization constant, ``ell`` the cost of a
    wrong prediction, and ``epsilon`` the regression insensitivity.
    """

    K: int
    alpha_k: float
    beta_t: float = 0.01
    nu2: float = 1.0
    c: float = 1.0
    ell: float = 1.0
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.alpha_k <= 0 or self.beta_t <= 0:
            raise ValueError("Dirichlet weights must be positive")
        if self.nu2 <= 0:
            raise ValueError("prior variance nu2 must be positive")
        if self.c < 0:
            raise ValueError("c must be non-negative")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    @classmethod
    def with_scalar_alpha(cls, K: int, alpha: float = 1.0, **kwargs) -> "Hyperparams":
        return cls(K=K, alpha_k=alpha / K, **kwargs)


@dataclass
class CountState:
    """Topic assignments plus count matrices kept in lockstep.

    Tokens and assignments are stored flat with document offsets so a
    whole sweep is one compiled pass; ``tokens[d]`` and ``z[d]`` are
    per-document views into the flat arrays.  ``ckt`` is K x V, ``ck``
    its row sums, ``cdk`` is D x K.
    """

    tokens_flat: np.ndarray = field(repr=False)
    z_flat: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    tokens: list = field(repr=False)
    z: list = field(repr=False)
    ckt: np.ndarray = field(repr=False)
    ck: np.ndarray = field(repr=False)
    cdk: np.ndarray = field(repr=False)
    K: int = 0
    V: int = 0

    @property
    def D(self) -> int:
        return len(self.offsets) - 1

    def doc_len(self, d: int) -> int:
        return int(self.offsets[d + 1] - self.offsets[d])

    def doc_lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    @classmethod
    def from_assignments(cls, tokens, z, K: int, V: int) -> "CountState":
        lengths = np.array([np.asarray(t).size for t in tokens], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(lengths)])
        tokens_flat = (
            np.concatenate([np.asarray(t, dtype=np.int32) for t in tokens])
            if len(tokens)
            else np.zeros(0, dtype=np.int32)
        )
        z_flat = (
            np.concatenate([np.asarray(zs, dtype=np.int32) for zs in z])
            if len(z)
            else np.zeros(0, dtype=np.int32)
        )
        token_views = [tokens_flat[offsets[d] : offsets[d + 1]] for d in range(len(tokens))]
        z_views = [z_flat[offsets[d] : offsets[d + 1]] for d in range(len(z))]
        ckt = np.zeros((K, V), dtype=np.int64)
        cdk = np.zeros((len(tokens), K), dtype=np.int64)
        for d, (toks, zs) in enumerate(zip(token_views, z_views)):
            np.add.at(ckt, (zs, toks), 1)
            cdk[d] = np.bincount(zs, minlength=K)
        return cls(
            tokens_flat=tokens_flat,
            z_flat=z_flat,
            offsets=offsets,
            tokens=token_views,
            z=z_views,
            ckt=ckt,
            ck=ckt.sum(axis=1),
            cdk=cdk,
            K=K,
            V=V,
        )

    def rebuild(self) -> "CountState":
        """Recompute all counts from scratch; used to verify consistency."""
        return CountState.from_assignments(self.tokens, self.z, self.K, self.V)

    def remove_token(self, d: int, n: int) -> int:
        """Exclude token n of document d from the counts; returns its topic."""
        k = int(self.z[d][n])
        t = int(self.tokens[d][n])
        if self.cdk[d, k] <= 0 or self.ckt[k, t] <= 0 or self.ck[k] <= 0:
            raise ValueError("count state corrupted: decrement below zero")
        self.cdk[d, k] -= 1
        self.ckt[k, t] -= 1
        self.ck[k] -= 1
        return k

    def add_token(self, d: int, n: int, k: int) -> None:
        t = int(self.tokens[d][n])
        self.cdk[d, k] += 1
        self.ckt[k, t] += 1
        self.ck[k] += 1
        self.z[d][n] = k

    def zbar_matrix(self) -> np.ndarray:
        """Per-document topic proportions; rows of empty documents are zero."""
        lengths = np.maximum(self.doc_lengths(), 1)
        return self.cdk / lengths[:, None]


def init_assignments(rng: RngState, corpus: LabeledCorpus, K: int) -> CountState:
    """Assign every token a uniform-random topic."""
    if K < 1:
        raise ValueError("K must be >= 1")
    init_rng = rng.child(STREAM_INIT)
    tokens = corpus.tokens_list()
    z = [init_rng.integers(0, K, size=t.size).astype(np.int32) for t in tokens]
    return CountState.from_assignments(tokens, z, K, corpus.vocab.size)


def lda_token_conditional(state: CountState, hyper: Hyperparams, d: int, n: int) -> np.ndarray:
    """Unnormalized collapsed-LDA weights for token (d, n).

    The token must currently be excluded from the counts.  Weight k is
    (ckt[k,t] + beta) * (cdk[d,k] + alpha_k) / (ck[k] + V * beta).
    """
    w = np.empty(state.K)
    etas, lin, quad, cross = kernels.no_task_arrays(state.K)
    kernels.token_weights(
        state.ckt,
        state.ck,
        state.cdk[d],
        int(state.tokens[d][n]),
        etas,
        lin,
        quad,
        cross,
        0.0,
        hyper.alpha_k,
        hyper.beta_t,
        state.V * hyper.beta_t,
        w,
    )
    return w


def zbar(state: CountState, d: int) -> np.ndarray:
    """Topic-proportion vector cdk[d] / N_d; undefined for empty documents."""
    n_d = state.doc_len(d)
    if n_d == 0:
        raise ValueError(f"document {d} is empty; zbar is undefined")
    return state.cdk[d] / n_d


def lda_sweep(rng_sweep: RngState, state: CountState, hyper: Hyperparams) -> None:
    """One full unsupervised Gibbs sweep over all non-empty documents."""
    etas, _, _, _ = kernels.no_task_arrays(state.K)
    coefs = np.zeros((state.D, 0))
    us = rng_sweep.uniform(state.tokens_flat.size)
    kernels.corpus_sweep(
        state.tokens_flat, state.z_flat, state.offsets,
        state.ckt, state.ck, state.cdk,
        etas, coefs, coefs, coefs,
        hyper.alpha_k, hyper.beta_t, state.V * hyper.beta_t, us,
    )


def run_lda_baseline(
    rng: RngState, corpus: LabeledCorpus, hyper: Hyperparams, iterations: int
) -> CountState:
    """Unsupervised collapsed Gibbs sampling for the stated iterations."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    state = init_assignments(rng, corpus, hyper.K)
    sweep_rng = rng.child(STREAM_SWEEP)
    for _ in range(iterations):
        lda_sweep(sweep_rng, state, hyper)
    return state
