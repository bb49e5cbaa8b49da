"""Synthetic planted-topic corpora for benchmarks and end-to-end tests.

Topics occupy disjoint high-probability term blocks; documents mix the
topics keyed to their class (or carry a linear response in their true
topic proportions), so the right answer is known by construction and
difficulty is controlled by the block mass and the mixing
concentrations.
"""

from __future__ import annotations

import numpy as np

from .corpus import Document, LabeledCorpus, VocabMap

__all__ = [
    "planted_topics",
    "binary_corpus",
    "multiclass_corpus",
    "multilabel_corpus",
    "regression_corpus",
]


def planted_topics(K: int, V: int, block_mass: float = 0.95) -> np.ndarray:
    """(K, V) topic matrix with disjoint dominant blocks of size V // K."""
    if V % K:
        raise ValueError("V must be divisible by K")
    block = V // K
    phi = np.full((K, V), (1.0 - block_mass) / (V - block))
    for k in range(K):
        phi[k, k * block : (k + 1) * block] = block_mass / block
    return phi


def _draw_docs(gen, phi, thetas, n_per_doc):
    docs = []
    zbars = np.empty((len(thetas), phi.shape[0]))
    for d, theta in enumerate(thetas):
        n = max(1, int(gen.poisson(n_per_doc)))
        z = gen.choice(phi.shape[0], size=n, p=theta)
        tokens = np.array(
            [gen.choice(phi.shape[1], p=phi[k]) for k in z], dtype=np.int32
        )
        docs.append(Document(doc_id=d, tokens=tokens))
        zbars[d] = np.bincount(z, minlength=phi.shape[0]) / n
    return docs, zbars


def binary_corpus(
    seed: int,
    n_docs: int,
    n_per_doc: int = 60,
    K: int = 4,
    V: int = 200,
    block_mass: float = 0.9,
    pair_weight: float = 1.6,
    off_weight: float = 0.5,
    lead_topic_docs: bool = False,
) -> LabeledCorpus:
    """Two classes keyed to the disjoint topic pairs (0,1) and (2,3).

    Class +1 documents mix mostly the first topic pair, class -1 the
    second; ``off_weight`` controls how much the opposite pair leaks in
    and therefore how hard the task is.  With ``lead_topic_docs`` each
    document is instead dominated by a single topic drawn from its
    class's pair, which leaves almost no within-pair co-occurrence: a
    topic model with fewer topics than the generator then has to rely
    on label information to merge blocks along class lines.
    """
    gen = np.random.default_rng(seed)
    labels = np.where(np.arange(n_docs) % 2 == 0, 1, -1)
    if lead_topic_docs:
        conc = np.full((n_docs, K), off_weight)
        lead = np.where(labels > 0, 0, K // 2) + gen.integers(0, K // 2, size=n_docs)
        conc[np.arange(n_docs), lead] = pair_weight
    else:
        conc = np.where(
            (np.arange(K)[None, :] < K // 2) == (labels[:, None] > 0),
            pair_weight,
            off_weight,
        )
    thetas = [gen.dirichlet(c) for c in conc]
    docs, _ = _draw_docs(gen, planted_topics(K, V, block_mass), thetas, n_per_doc)
    return LabeledCorpus(
        vocab=VocabMap.synthetic(V),
        docs=tuple(docs),
        responses=tuple(int(y) for y in labels),
        task="binary",
    )


def multiclass_corpus(
    seed: int,
    n_docs: int,
    n_classes: int = 5,
    n_per_doc: int = 50,
    V: int | None = None,
    block_mass: float = 0.9,
    own_weight: float = 2.0,
    off_weight: float = 0.35,
) -> LabeledCorpus:
    """One dominant topic per class, K = number of classes."""
    V = 50 * n_classes if V is None else V
    gen = np.random.default_rng(seed)
    labels = np.arange(n_docs) % n_classes
    conc = np.full((n_docs, n_classes), off_weight)
    conc[np.arange(n_docs), labels] = own_weight
    thetas = [gen.dirichlet(c) for c in conc]
    docs, _ = _draw_docs(gen, planted_topics(n_classes, V, block_mass), thetas, n_per_doc)
    return LabeledCorpus(
        vocab=VocabMap.synthetic(V),
        docs=tuple(docs),
        responses=tuple(int(y) for y in labels),
        task="multiclass",
    )


def multilabel_corpus(
    seed: int,
    n_docs: int,
    n_classes: int = 4,
    n_per_doc: int = 50,
    V: int | None = None,
    block_mass: float = 0.9,
) -> LabeledCorpus:
    """Each document activates one or two topics; its label set is the
    active topics."""
    V = 50 * n_classes if V is None else V
    gen = np.random.default_rng(seed)
    thetas, labels = [], []
    for _ in range(n_docs):
        n_active = int(gen.integers(1, 3))
        active = gen.choice(n_classes, size=n_active, replace=False)
        conc = np.full(n_classes, 0.15)
        conc[active] = 2.0
        thetas.append(gen.dirichlet(conc))
        labels.append(frozenset(int(a) for a in active))
    docs, _ = _draw_docs(gen, planted_topics(n_classes, V, block_mass), thetas, n_per_doc)
    return LabeledCorpus(
        vocab=VocabMap.synthetic(V),
        docs=tuple(docs),
        responses=tuple(labels),
        task="multilabel",
    )


def regression_corpus(
    seed: int,
    n_docs: int,
    n_per_doc: int = 60,
    K: int = 4,
    V: int = 200,
    block_mass: float = 0.9,
    eta_star=(-2.0, -1.0, 1.0, 2.0),
    noise_sd: float = 0.1,
) -> LabeledCorpus:
    """Scores are a planted linear model of the true topic proportions
    plus Gaussian noise."""
    gen = np.random.default_rng(seed)
    eta_star = np.asarray(eta_star, dtype=np.float64)
    if eta_star.size != K:
        raise ValueError("eta_star must have one weight per topic")
    thetas = [gen.dirichlet(np.full(K, 0.5)) for _ in range(n_docs)]
    docs, zbars = _draw_docs(gen, planted_topics(K, V, block_mass), thetas, n_per_doc)
    scores = zbars @ eta_star + gen.normal(0.0, noise_sd, size=n_docs)
    return LabeledCorpus(
        vocab=VocabMap.synthetic(V),
        docs=tuple(docs),
        responses=tuple(float(s) for s in scores),
        task="regression",
    )
