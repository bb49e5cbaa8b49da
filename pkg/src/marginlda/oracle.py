"""Reference implementations used to validate the samplers.

Everything here favours transparency over speed: the exact collapsed
joint density evaluated on tiny instances, brute-force token
conditionals derived from it, adaptive quadrature for the scale-mixture
identities, and a dense classifier-posterior assembly that shares no
code with the trainers' path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .topic_state import CountState, Hyperparams

__all__ = [
    "TinyInstance",
    "random_instance",
    "count_state",
    "joint_log_density",
    "brute_force_token_conditional",
    "quadrature_scale_mixture",
    "dual_scale_mixture_quadrature",
    "dense_eta_posterior_reference",
]

_CAPS = dict(D=5, K=4, V=10, N_d=6, L=3)


@dataclass(frozen=True)
class TinyInstance:
    """A fully specified problem small enough for exhaustive evaluation.

    ``kind`` is "binary", "multitask", or "regression".  ``labels`` holds
    (L, D) task labels in {-1, +1} for the hinge kinds and the (D,)
    score vector for regression (with L = 1 classifiers).
    """

    tokens: tuple          # per-document int arrays
    K: int
    V: int
    hyper: Hyperparams
    kind: str
    etas: np.ndarray       # (L, K)
    lambdas: np.ndarray    # (L, D)
    labels: np.ndarray
    omegas: np.ndarray | None = None   # (D,) for regression

    def __post_init__(self):
        if len(self.tokens) > _CAPS["D"]:
            raise ValueError("instance exceeds the document cap")
        if self.K > _CAPS["K"] or self.V > _CAPS["V"]:
            raise ValueError("instance exceeds the topic or vocabulary cap")
        if any(t.size > _CAPS["N_d"] for t in self.tokens):
            raise ValueError("instance exceeds the document-length cap")
        if self.etas.shape[0] > _CAPS["L"]:
            raise ValueError("instance exceeds the task cap")

    @property
    def D(self) -> int:
        return len(self.tokens)

    @property
    def L(self) -> int:
        return int(self.etas.shape[0])


def random_instance(gen: np.random.Generator, kind: str, n_tasks: int | None = None,
                    c: float | None = None) -> TinyInstance:
    """Draw a random instance within the size caps."""
    D = int(gen.integers(2, _CAPS["D"] + 1))
    K = int(gen.integers(2, _CAPS["K"] + 1))
    V = int(gen.integers(3, _CAPS["V"] + 1))
    n_tasks = n_tasks if n_tasks is not None else (
        1 if kind != "multitask" else int(gen.integers(1, _CAPS["L"] + 1))
    )
    tokens = tuple(
        gen.integers(0, V, size=int(gen.integers(1, _CAPS["N_d"] + 1))).astype(np.int32)
        for _ in range(D)
    )
    c = float(gen.choice([0.5, 1.0, 2.0])) if c is None else c
    hyper = Hyperparams(
        K=K,
        alpha_k=float(gen.uniform(0.2, 2.0)),
        beta_t=float(gen.choice([0.01, 0.05, 0.1])),
        nu2=1.0,
        c=c,
        ell=float(gen.uniform(1.0, 5.0)),
        epsilon=float(gen.choice([0.0, 0.1, 0.5])),
    )
    etas = gen.normal(size=(n_tasks, K))
    lambdas = np.exp(gen.normal(0.0, 0.5, size=(n_tasks, D)))
    if kind == "regression":
        labels = gen.normal(size=D)
        omegas = np.exp(gen.normal(0.0, 0.5, size=D))
    else:
        labels = gen.choice([-1.0, 1.0], size=(n_tasks, D))
        omegas = None
    return TinyInstance(
        tokens=tokens, K=K, V=V, hyper=hyper, kind=kind,
        etas=etas, lambdas=lambdas, labels=labels, omegas=omegas,
    )


def count_state(instance: TinyInstance, Z) -> CountState:
    return CountState.from_assignments(list(instance.tokens), list(Z), instance.K, instance.V)


def _log_dirichlet_delta(x: np.ndarray) -> float:
    return float(sum(math.lgamma(v) for v in x) - math.lgamma(float(x.sum())))


def joint_log_density(instance: TinyInstance, Z) -> float:
    """Log of the unnormalized collapsed joint q(eta, lambda[, omega], Z).

    Includes the Gaussian prior on the classifiers, the collapsed LDA
    factor (a ratio of Dirichlet normalizers per document and per
    topic), and the augmented likelihood factors of the instance kind.
    Documents without tokens contribute no augmentation factor.
    """
    hyper = instance.hyper
    state = count_state(instance, Z)
    alpha = np.full(instance.K, hyper.alpha_k)
    beta = np.full(instance.V, hyper.beta_t)

    total = float(-np.sum(instance.etas**2) / (2.0 * hyper.nu2))
    total -= instance.etas.size * 0.5 * math.log(2.0 * math.pi * hyper.nu2)
    log_delta_alpha = _log_dirichlet_delta(alpha)
    log_delta_beta = _log_dirichlet_delta(beta)
    for d in range(instance.D):
        total += _log_dirichlet_delta(state.cdk[d] + alpha) - log_delta_alpha
    for k in range(instance.K):
        total += _log_dirichlet_delta(state.ckt[k] + beta) - log_delta_beta

    c = hyper.c
    for d in range(instance.D):
        n_d = instance.tokens[d].size
        if n_d == 0:
            continue
        zbar = state.cdk[d] / n_d
        if instance.kind == "regression":
            delta = instance.labels[d] - float(instance.etas[0] @ zbar)
            lam = instance.lambdas[0, d]
            om = instance.omegas[d]
            total += -0.5 * math.log(2.0 * math.pi * lam)
            total += -((lam + c * (delta - hyper.epsilon)) ** 2) / (2.0 * lam)
            total += -0.5 * math.log(2.0 * math.pi * om)
            total += -((om - c * (delta + hyper.epsilon)) ** 2) / (2.0 * om)
        else:
            for i in range(instance.L):
                zeta = hyper.ell - instance.labels[i, d] * float(instance.etas[i] @ zbar)
                lam = instance.lambdas[i, d]
                total += -0.5 * math.log(2.0 * math.pi * lam)
                total += -((lam + c * zeta) ** 2) / (2.0 * lam)
    return total


def brute_force_token_conditional(instance: TinyInstance, Z, d: int, n: int) -> np.ndarray:
    """Conditional of token (d, n) by evaluating the joint at all K
    completions; returns normalized probabilities."""
    logs = np.empty(instance.K)
    Z_work = [np.array(z, dtype=np.int32, copy=True) for z in Z]
    for k in range(instance.K):
        Z_work[d][n] = k
        logs[k] = joint_log_density(instance, Z_work)
    logs -= logs.max()
    p = np.exp(logs)
    return p / p.sum()


def _mixture_integrand(zeta: float, c: float):
    def f(lam: float) -> float:
        return math.exp(-((lam + c * zeta) ** 2) / (2.0 * lam)) / math.sqrt(
            2.0 * math.pi * lam
        )

    return f


def quadrature_scale_mixture(zeta: float, c: float) -> float:
    """Numerically integrate the scale-mixture identity's left side:
    integral over lam > 0 of (2 pi lam)^(-1/2) exp(-(lam + c zeta)^2 / (2 lam)),
    which equals exp(-2 c max(0, zeta)).

    Splits at the integrand's scale c|zeta| and doubles the upper limit
    until the analytic tail bound is negligible.
    """
    if c < 0:
        raise ValueError("c must be non-negative")
    f = _mixture_integrand(zeta, c)
    split = c * abs(zeta)
    upper = max(2.0 * split, 16.0)
    # Tail of the integrand is below exp(-c*zeta) * exp(-u/2) / sqrt(2 pi u).
    while 2.0 * math.exp(-upper / 2.0) > 1e-18:
        upper *= 2.0
    total = 0.0
    if split > 0.0:
        part, _ = quad(f, 0.0, split, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += part
    part, _ = quad(f, split, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
    return total + part


def dual_scale_mixture_quadrature(delta: float, epsilon: float, c: float) -> float:
    """Product of the two tube-side mixture integrals; equals
    exp(-2 c max(0, |delta| - epsilon))."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return quadrature_scale_mixture(delta - epsilon, c) * quadrature_scale_mixture(
        -delta - epsilon, c
    )


def dense_eta_posterior_reference(instance: TinyInstance, Z) -> list[tuple[np.ndarray, np.ndarray]]:
    """Classifier posteriors assembled by direct dense summation.

    Returns one (mu, Sigma) pair per task, computed with explicit outer
    products and a textbook inverse, independent of the trainers'
    factored path.
    """
    hyper = instance.hyper
    state = count_state(instance, Z)
    c = hyper.c
    out = []
    for i in range(instance.L):
        prec = np.eye(instance.K) / hyper.nu2
        rhs = np.zeros(instance.K)
        for d in range(instance.D):
            n_d = instance.tokens[d].size
            if n_d == 0:
                continue
            zbar = state.cdk[d] / n_d
            if instance.kind == "regression":
                lam = instance.lambdas[0, d]
                om = instance.omegas[d]
                rho = 1.0 / lam + 1.0 / om
                psi = (instance.labels[d] - hyper.epsilon) / lam + (
                    instance.labels[d] + hyper.epsilon
                ) / om
                prec += c * c * rho * np.outer(zbar, zbar)
                rhs += c * c * psi * zbar
            else:
                lam = instance.lambdas[i, d]
                y = instance.labels[i, d]
                prec += c * c * np.outer(zbar, zbar) / lam
                rhs += c * y * (lam + c * hyper.ell) / lam * zbar
        sigma = np.linalg.inv(prec)
        out.append((sigma @ rhs, sigma))
    return out
