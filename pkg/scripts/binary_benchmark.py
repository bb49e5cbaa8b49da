#!/usr/bin/env python3
"""Planted-topic binary benchmark: max-margin training vs. the two-step
unsupervised baseline (collapsed-Gibbs topics + least-squares sign fit).

Prints one row per seed plus the means.  The corpus has four disjoint
term blocks but each document leans on a single topic of its class's
pair, so a two-topic model has to use the labels to merge blocks along
class lines -- which is exactly what the supervised sampler does and
the unsupervised pipeline cannot.
"""

import argparse

import numpy as np

from marginlda.binary import TrainConfig, train
from marginlda.metrics import accuracy
from marginlda.predict import (
    ModelSnapshot,
    TestInferenceConfig,
    estimate_phi_hat,
    infer_corpus_zbars,
    predict_corpus,
)
from marginlda.randkit import RngState
from marginlda.synth import binary_corpus
from marginlda.topic_state import Hyperparams, run_lda_baseline

CORPUS_KW = dict(n_per_doc=60, K=4, V=200, block_mass=0.9,
                 pair_weight=2.5, off_weight=0.06, lead_topic_docs=True)


def baseline_accuracy(seed, train_c, test_c, hyper, sweeps=40):
    state = run_lda_baseline(RngState(seed + 5000), train_c, hyper, sweeps)
    zb = state.zbar_matrix()
    y = np.array(train_c.responses, dtype=np.float64)
    design = np.hstack([zb, np.ones((len(zb), 1))])
    w, *_ = np.linalg.lstsq(design, y, rcond=None)
    snap = ModelSnapshot(phi_hat=estimate_phi_hat(state, hyper.beta_t),
                         etas=w[None, :-1], hyper=hyper, task_kind="binary")
    zb_test = infer_corpus_zbars(RngState(seed + 6000), snap, test_c, TestInferenceConfig())
    pred = np.where(zb_test @ w[:-1] + w[-1] >= 0.0, 1, -1)
    return accuracy(list(pred), list(test_c.responses))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--topics", type=int, default=2)
    parser.add_argument("--burnin", type=int, default=10)
    parser.add_argument("--train-docs", type=int, default=400)
    parser.add_argument("--test-docs", type=int, default=200)
    args = parser.parse_args()

    hyper = Hyperparams.with_scalar_alpha(
        K=args.topics, alpha=1.0, beta_t=0.01, c=1.0, ell=164.0
    )
    print("seed\tmarginlda_acc\tbaseline_acc")
    med, base = [], []
    for seed in range(args.seeds):
        train_c = binary_corpus(seed, n_docs=args.train_docs, **CORPUS_KW)
        test_c = binary_corpus(seed + 1000, n_docs=args.test_docs, **CORPUS_KW)
        config = TrainConfig(burn_in=args.burnin, hyper=hyper, seed=seed)
        _, snap = train(RngState(seed), train_c, config)
        preds = predict_corpus(snap, test_c, TestInferenceConfig(), seed=seed + 2000)
        med.append(accuracy(preds, list(test_c.responses)))
        base.append(baseline_accuracy(seed, train_c, test_c, hyper))
        print(f"{seed}\t{med[-1]:.4f}\t{base[-1]:.4f}")
    print(f"mean\t{np.mean(med):.4f}\t{np.mean(base):.4f}")


if __name__ == "__main__":
    main()
