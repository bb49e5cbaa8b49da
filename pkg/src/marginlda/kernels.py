"""Shared sampling kernels for the collapsed Gibbs trainers.

The jitted :func:`token_weights` is the single implementation of the
per-token conditional used everywhere: the unsupervised baseline
(zero tasks), the binary trainer (one task), the regression trainer
(one task with its own coefficients), and the multi-task trainer.  The
public conditional operations in the trainer modules call the same
compiled function the sweep uses, so a slow reference sweep and the
fast in-place sweep produce bitwise-identical chains.

Random-stream layout.  Each trainer derives fixed child streams from
its root state; the keyed derivation makes every draw independent of
sibling-stream consumption, which is what makes one-vs-all training
reproducible at any worker count:

* ``STREAM_INIT``            -- initial uniform topic assignments
* ``STREAM_SWEEP``           -- one uniform per token per sweep, drawn
  per document in document order
* ``(STREAM_ETA, i)``        -- classifier draws for task i
* ``(STREAM_LAMBDA, i)``     -- per-document augmentation draws, task i
* ``(STREAM_OMEGA, i)``      -- second augmentation stream (regression)
* ``(STREAM_OVA, i)``        -- root for one-vs-all task i
* ``(STREAM_PREDICT, d, …)`` -- test-document inference
* ``STREAM_CV``              -- cross-validation fold shuffling
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

from .randkit import (
    RngState,
    cholesky_with_jitter,
    clamped_ig_mean,
    sample_inverse_gaussian,
    sample_mvn,
)

(
    STREAM_INIT,
    STREAM_SWEEP,
    STREAM_ETA,
    STREAM_LAMBDA,
    STREAM_OMEGA,
    STREAM_OVA,
    STREAM_PREDICT,
    STREAM_CV,
) = range(8)

@njit(cache=True, nogil=True)
def token_weights(ckt, ck, row, t, etas, lin, quad, cross, inv_nm1, alpha_k, beta_t, vbeta, w):
    """Unnormalized conditional weights for one excluded token.

    ``row`` is the document's topic-count row and ``ckt``/``ck`` the
    topic-term counts, all with the token already removed.  The margin
    exponent sums per-task contributions lin*eta_k - quad*eta_k^2 -
    cross*(eta . row)*inv_nm1*eta_k and is max-subtracted before
    exponentiation to guard against overflow; the returned weights are
    therefore unnormalized but overall-scaled, which cancels once the
    categorical draw normalizes.  Returns the weight total.
    """
    n_tasks = etas.shape[0]
    n_topics = ckt.shape[0]
    for k in range(n_topics):
        w[k] = 0.0
    for i in range(n_tasks):
        s_i = 0.0
        for k in range(n_topics):
            s_i += etas[i, k] * row[k]
        cs = cross[i] * s_i * inv_nm1
        for k in range(n_topics):
            eik = etas[i, k]
            w[k] += lin[i] * eik - quad[i] * (eik * eik) - cs * eik
    m = -1.0e308
    for k in range(n_topics):
        if w[k] > m:
            m = w[k]
    tot = 0.0
    for k in range(n_topics):
        w[k] = (ckt[k, t] + beta_t) * (row[k] + alpha_k) / (ck[k] + vbeta) * np.exp(w[k] - m)
        tot += w[k]
    return tot


@njit(cache=True, nogil=True)
def corpus_sweep(tokens_flat, z_flat, offsets, ckt, ck, cdk, etas, lin, quad, cross,
                 alpha_k, beta_t, vbeta, us_flat):
    """Resample every token of every document in one compiled pass.

    ``offsets`` delimits documents in the flat token array (empty
    documents contribute an empty range and are skipped).  The
    coefficient rows are aligned with document indices.  Consumes one
    uniform per token in flat order, which matches per-document draws
    exactly because the generator's stream is invariant to batching;
    the categorical rule (strict ``u < cumsum``) matches
    ``randkit.categorical_from_uniform`` exactly.
    """
    n_docs = offsets.shape[0] - 1
    n_topics = ckt.shape[0]
    w = np.empty(n_topics)
    for d in range(n_docs):
        start = offsets[d]
        end = offsets[d + 1]
        n = end - start
        if n == 0:
            continue
        inv_nm1 = 1.0 / (n - 1) if n > 1 else 0.0
        row = cdk[d]
        lin_d = lin[d]
        quad_d = quad[d]
        cross_d = cross[d]
        for j in range(start, end):
            t = tokens_flat[j]
            k_old = z_flat[j]
            if row[k_old] <= 0 or ckt[k_old, t] <= 0 or ck[k_old] <= 0:
                raise ValueError("count state corrupted: decrement below zero")
            row[k_old] -= 1
            ckt[k_old, t] -= 1
            ck[k_old] -= 1
            tot = token_weights(
                ckt, ck, row, t, etas, lin_d, quad_d, cross_d, inv_nm1,
                alpha_k, beta_t, vbeta, w,
            )
            u = us_flat[j] * tot
            k_new = n_topics - 1
            acc = 0.0
            for k in range(n_topics - 1):
                acc += w[k]
                if u < acc:
                    k_new = k
                    break
            row[k_new] += 1
            ckt[k_new, t] += 1
            ck[k_new] += 1
            z_flat[j] = k_new


def no_task_arrays(n_topics: int):
    """Coefficient arrays for an unsupervised (zero-task) sweep."""
    return (
        np.zeros((0, n_topics)),
        np.zeros(0),
        np.zeros(0),
        np.zeros(0),
    )


def margin_coefs(y, lam, gamma, c: float, ell: float):
    """Per-(document, task) sweep coefficients for the hinge-loss model.

    Broadcasts elementwise, so it serves both a single document (arrays
    of shape (L,)) and a whole corpus (shape (L, D) with gamma (D,)).
    """
    lin = (c * gamma) * y * (c * ell + lam) / lam
    quad = (c * c) * (gamma * gamma) / (2.0 * lam)
    cross = (c * c) * (gamma * (1.0 - gamma)) / lam
    return lin, quad, cross


def regression_aux(y, lam, om, epsilon: float):
    """Auxiliary coefficients rho = 1/lam + 1/om and
    psi = (y - eps)/lam + (y + eps)/om of the dual augmentation."""
    rho = 1.0 / lam + 1.0 / om
    psi = (y - epsilon) / lam + (y + epsilon) / om
    return rho, psi


def regression_coefs(y, lam, om, gamma, c: float, epsilon: float):
    """Sweep coefficients for the epsilon-insensitive regression model.

    Derived by expanding the two augmented Gaussian factors; every term
    carries c^2 because the first-order +/- c*Delta contributions of the
    two factors cancel exactly.
    """
    rho, psi = regression_aux(y, lam, om, epsilon)
    lin = (c * c) * gamma * psi
    quad = (c * c) * (gamma * gamma) * rho / 2.0
    cross = (c * c) * (gamma * (1.0 - gamma)) * rho
    return lin, quad, cross


def weight_posterior(zbars: np.ndarray, a_coefs: np.ndarray, b_coefs: np.ndarray,
                     nu2: float, c: float):
    """Gaussian posterior of a classifier weight vector.

    Precision nu^-2 I + c^2 sum_d a_d zbar_d zbar_d^T, linear term
    sum_d b_d zbar_d; returns (mu, Sigma).  The precision is factored
    with the jitter ladder, so Sigma is PD even when finite precision
    makes the assembled matrix marginally indefinite.
    """
    n_topics = zbars.shape[1]
    prec = np.eye(n_topics) / nu2
    rhs = np.zeros(n_topics)
    if zbars.shape[0]:
        prec = prec + (c * c) * (zbars.T * a_coefs) @ zbars
        prec = 0.5 * (prec + prec.T)
        rhs = zbars.T @ b_coefs
    factor = cholesky_with_jitter(prec)
    linv = solve_triangular(factor.L, np.eye(n_topics), lower=True)
    sigma = linv.T @ linv
    sigma = 0.5 * (sigma + sigma.T)
    mu = sigma @ rhs
    return mu, sigma


def draw_weight_vector(rng: RngState, zbars, a_coefs, b_coefs, nu2: float, c: float):
    mu, sigma = weight_posterior(zbars, a_coefs, b_coefs, nu2, c)
    return sample_mvn(rng, mu, sigma)


def draw_inverse_lambda_vec(rng: RngState, zetas: np.ndarray, c: float) -> np.ndarray:
    """Vector of augmentation variables: 1/x with x ~ IG(1/(c|zeta_d|), 1).

    The mean parameter is clamped (|zeta| floored at 1e-8, mean capped
    at 1e8) because it diverges as zeta -> 0.  Consumes len(zetas)
    normals followed by len(zetas) uniforms from ``rng``.
    """
    a = clamped_ig_mean(c, zetas)
    x = sample_inverse_gaussian(rng, a, 1.0)
    return 1.0 / x
