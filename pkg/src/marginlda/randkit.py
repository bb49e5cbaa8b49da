"""Seeded random-variate generation used throughout the samplers.

Everything is built on a single documented deterministic generator
(PCG64 keyed by ``SeedSequence``).  Child streams are derived from the
root entropy plus an explicit spawn key, so parallel workers can be
handed independent, reproducible streams that do not depend on how many
draws the parent has consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RngState",
    "CholeskyFactor",
    "sample_categorical",
    "sample_inverse_gaussian",
    "sample_gig_half",
    "cholesky_with_jitter",
    "sample_mvn",
]

# Jitter ladder for nearly-singular symmetric matrices: powers of ten
# from 1e-10 up to the hard cap 1e-4 (0.0 is tried first).
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

# Guards for the inverse-Gaussian mean parameter 1/(c|zeta|), which
# diverges as zeta -> 0.
IG_MEAN_CAP = 1e8
ZETA_FLOOR = 1e-8


@dataclass
class RngState:
    """Deterministic random stream keyed by (seed, spawn_key).

    Identical (seed, spawn_key) pairs always produce identical draw
    sequences.  ``child`` derives an independent stream without
    consuming randomness from the parent, which keeps results stable
    under any parallel execution order.
    """

    seed: int
    spawn_key: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        seq = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def child(self, *key: int) -> "RngState":
        return RngState(self.seed, self.spawn_key + tuple(int(k) for k in key))

    # Thin passthroughs; all randomness in the package flows through these.
    def uniform(self, size=None):
        return self._gen.random(size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T = A + jitter_applied * I."""

    L: np.ndarray
    jitter_applied: float


def categorical_from_uniform(weights: np.ndarray, u: float) -> int:
    """Map a uniform draw u in [0, 1) to an index under ``weights``.

    Shared by :func:`sample_categorical` and the token sweep kernels so
    both consume exactly one uniform per draw.
    """
    cum = np.cumsum(weights)
    k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(k, len(weights) - 1)


def sample_categorical(rng: RngState, weights, size: int | None = None):
    """Draw index k with probability weights[k] / sum(weights).

    Weights must be finite, non-negative, and not all zero.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d array")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0.0):
        raise ValueError("weights must be non-negative")
    total = w.sum()
    if total <= 0.0:
        raise ValueError("weights must not be all zero")
    cum = np.cumsum(w)
    if size is None:
        k = int(np.searchsorted(cum, rng.uniform() * total, side="right"))
        return min(k, w.size - 1)
    u = rng.uniform(size) * total
    ks = np.searchsorted(cum, u, side="right")
    return np.minimum(ks, w.size - 1)


def sample_inverse_gaussian(rng: RngState, a, b, size: int | None = None):
    """Draw from the inverse Gaussian IG(a, b) with mean a and shape b.

    Uses the Michael-Schucany-Haas transformation with multiple roots:
    one standard normal and one uniform per draw (vectorised draws
    consume ``size`` normals followed by ``size`` uniforms).

    The root formula is evaluated as x = a / (1 + w + sqrt(w * (w + 2)))
    with w = a * y / (2 * b), which is algebraically identical to the
    textbook form but avoids catastrophic cancellation for large w.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("IG parameters must be finite")
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("IG parameters must be positive")
    scalar = size is None and a.ndim == 0 and b.ndim == 0
    n = size if size is not None else np.broadcast(a, b).shape or None
    y = np.square(rng.standard_normal(n))
    w = a * y / (2.0 * b)
    x = a / (1.0 + w + np.sqrt(w * (w + 2.0)))
    u = rng.uniform(n)
    out = np.where(u * (a + x) <= a, x, a * a / x)
    return float(out) if scalar else out


def sample_gig_half(rng: RngState, b, size: int | None = None):
    """Draw from GIG(1/2, 1, b), i.e. density proportional to
    x^(-1/2) * exp(-(b / x + x) / 2) on x > 0.

    Implemented through the reciprocal identity: if x ~ IG(1/sqrt(b), 1)
    then 1/x ~ GIG(1/2, 1, b).
    """
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)) or np.any(b <= 0.0):
        raise ValueError("GIG parameter b must be positive and finite")
    return 1.0 / sample_inverse_gaussian(rng, 1.0 / np.sqrt(b), 1.0, size=size)


def clamped_ig_mean(c: float, zeta) -> np.ndarray:
    """Mean parameter 1/(c|zeta|) guarded against zeta ~ 0 blow-up."""
    az = np.maximum(np.abs(np.asarray(zeta, dtype=np.float64)), ZETA_FLOOR)
    return np.minimum(1.0 / (c * az), IG_MEAN_CAP)


def cholesky_with_jitter(A: np.ndarray) -> CholeskyFactor:
    """Factor a symmetric matrix, adding diagonal jitter if needed.

    Jitter escalates through powers of ten from 1e-10 to 1e-4; raises
    if the matrix cannot be factored at the cap.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.max(np.abs(A))
    asym = np.max(np.abs(A - A.T))
    if scale > 0.0 and asym > 1e-10 * scale:
        raise ValueError(f"matrix is not symmetric (relative asymmetry {asym / scale:.3e})")
    eye = np.eye(A.shape[0])
    for jitter in _JITTERS:
        try:
            L = np.linalg.cholesky(A + jitter * eye if jitter else A)
        except np.linalg.LinAlgError:
            continue
        return CholeskyFactor(L=L, jitter_applied=jitter)
    raise ValueError("Cholesky factorization failed at the 1e-4 jitter cap")


def sample_mvn(rng: RngState, mu: np.ndarray, Sigma: np.ndarray, size: int | None = None):
    """Draw from N(mu, Sigma) as mu + L @ g with g standard normal.

    A zero covariance returns mu exactly (and consumes no randomness).
    """
    mu = np.asarray(mu, dtype=np.float64)
    Sigma = np.asarray(Sigma, dtype=np.float64)
    if Sigma.shape != (mu.size, mu.size):
        raise ValueError("covariance shape does not match mean")
    if not np.any(Sigma):
        return mu.copy() if size is None else np.tile(mu, (size, 1))
    L = cholesky_with_jitter(Sigma).L
    if size is None:
        return mu + L @ rng.standard_normal(mu.size)
    g = rng.standard_normal((size, mu.size))
    return mu + g @ L.T
