#!/usr/bin/env python3
"""Train/test accuracy as a function of burn-in length.

Emits a plot-ready TSV (burn_in, train_accuracy, test_accuracy, seconds)
on the planted binary benchmark, averaged over seeds.
"""

import argparse
import time

import numpy as np

from marginlda.binary import TrainConfig, train
from marginlda.metrics import accuracy
from marginlda.predict import TestInferenceConfig, predict_corpus
from marginlda.randkit import RngState
from marginlda.synth import binary_corpus
from marginlda.topic_state import Hyperparams

CORPUS_KW = dict(n_per_doc=60, K=4, V=200, block_mass=0.9,
                 pair_weight=2.5, off_weight=0.06, lead_topic_docs=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--burnins", type=int, nargs="*",
                        default=[0, 1, 2, 5, 10, 20, 50])
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--topics", type=int, default=2)
    args = parser.parse_args()

    hyper = Hyperparams.with_scalar_alpha(
        K=args.topics, alpha=1.0, beta_t=0.01, c=1.0, ell=164.0
    )
    print("burn_in\ttrain_accuracy\ttest_accuracy\tseconds")
    for burn_in in args.burnins:
        train_accs, test_accs, secs = [], [], []
        for seed in range(args.seeds):
            train_c = binary_corpus(seed, n_docs=400, **CORPUS_KW)
            test_c = binary_corpus(seed + 1000, n_docs=200, **CORPUS_KW)
            config = TrainConfig(burn_in=burn_in, hyper=hyper, seed=seed)
            t0 = time.perf_counter()
            state, snap = train(RngState(seed), train_c, config)
            secs.append(time.perf_counter() - t0)
            train_accs.append(state.history[-1][2] if state.history else float("nan"))
            preds = predict_corpus(snap, test_c, TestInferenceConfig(), seed=seed + 2000)
            test_accs.append(accuracy(preds, list(test_c.responses)))
        finite = [a for a in train_accs if not np.isnan(a)]
        train_mean = f"{np.mean(finite):.4f}" if finite else "nan"
        print(f"{burn_in}\t{train_mean}\t{np.mean(test_accs):.4f}\t{np.mean(secs):.3f}")


if __name__ == "__main__":
    main()
