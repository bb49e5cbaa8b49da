#!/usr/bin/env python3
"""Sensitivity of test accuracy to the Dirichlet weight, the margin
cost, and the number of test-time topic samples.

One TSV block per knob on the planted binary benchmark.
"""

import argparse

import numpy as np

from marginlda.binary import TrainConfig, train
from marginlda.metrics import accuracy
from marginlda.predict import TestInferenceConfig, predict_corpus
from marginlda.randkit import RngState
from marginlda.synth import binary_corpus
from marginlda.topic_state import Hyperparams

CORPUS_KW = dict(n_per_doc=60, K=4, V=200, block_mass=0.9,
                 pair_weight=2.5, off_weight=0.06, lead_topic_docs=True)


def run_one(seed, topics, alpha, ell, n_samples):
    train_c = binary_corpus(seed, n_docs=400, **CORPUS_KW)
    test_c = binary_corpus(seed + 1000, n_docs=200, **CORPUS_KW)
    hyper = Hyperparams.with_scalar_alpha(K=topics, alpha=alpha, beta_t=0.01,
                                          c=1.0, ell=ell)
    _, snap = train(RngState(seed), train_c, TrainConfig(burn_in=10, hyper=hyper,
                                                         seed=seed))
    preds = predict_corpus(snap, test_c, TestInferenceConfig(n_samples=n_samples),
                           seed=seed + 2000)
    return accuracy(preds, list(test_c.responses))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--topics", type=int, default=2)
    args = parser.parse_args()
    seeds = range(args.seeds)

    print("knob\tvalue\tmean_test_accuracy")
    for alpha in (0.1, 0.5, 1.0, 5.0, 10.0):
        acc = np.mean([run_one(s, args.topics, alpha, 164.0, 1) for s in seeds])
        print(f"alpha\t{alpha:g}\t{acc:.4f}")
    for ell in (1.0, 25.0, 164.0, 625.0):
        acc = np.mean([run_one(s, args.topics, 1.0, ell, 1) for s in seeds])
        print(f"ell\t{ell:g}\t{acc:.4f}")
    for n_samples in (1, 5, 10, 19):
        acc = np.mean([run_one(s, args.topics, 1.0, 164.0, n_samples) for s in seeds])
        print(f"test_samples\t{n_samples}\t{acc:.4f}")


if __name__ == "__main__":
    main()
