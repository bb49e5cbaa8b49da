"""Regression trainer: the epsilon-insensitive loss, dual augmentation
conditionals against the oracle, and end-to-end behaviour."""

from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from marginlda import synth
from marginlda.binary import TrainConfig
from marginlda.corpus import Document, LabeledCorpus, VocabMap
from marginlda.kernels import draw_inverse_lambda_vec
from marginlda.oracle import (
    TinyInstance,
    brute_force_token_conditional,
    count_state,
    dense_eta_posterior_reference,
    dual_scale_mixture_quadrature,
    random_instance,
)
from marginlda.randkit import RngState
from marginlda.regression import (
    draw_eta_reg,
    draw_lambda_reg,
    draw_omega_reg,
    eps_insensitive_loss,
    eta_posterior_reg,
    token_conditional_reg,
    train_regression,
)
from marginlda.topic_state import Hyperparams, init_assignments, lda_token_conditional


class TestEpsInsensitiveLoss:
    def test_inside_tube_is_free(self):
        assert eps_insensitive_loss(0.5, 1.0) == 0.0

    def test_outside_tube_is_linear(self):
        assert eps_insensitive_loss(2.0, 1.0) == 1.0

    def test_two_sided_identity(self):
        delta, eps = -3.0, 0.5
        loss = eps_insensitive_loss(delta, eps)
        assert loss == 2.5
        assert loss == max(0.0, delta - eps) + max(0.0, -delta - eps)

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            eps_insensitive_loss(1.0, -0.1)

    def test_jensen_bound_on_samples(self):
        gen = np.random.default_rng(0)
        deltas = gen.normal(size=200)
        eps = 0.3
        mean_loss = np.mean([eps_insensitive_loss(d, eps) for d in deltas])
        loss_of_mean = eps_insensitive_loss(float(deltas.mean()), eps)
        assert mean_loss >= loss_of_mean


class TestEtaPosteriorReg:
    def test_prior_when_no_documents(self):
        docs = (Document(0, np.array([], dtype=np.int32)),)
        corpus = LabeledCorpus(VocabMap.synthetic(2), docs, (0.5,), "regression")
        state = init_assignments(RngState(0), corpus, K=2)
        hyper = Hyperparams(K=2, alpha_k=1.0, nu2=3.0, c=1.0, epsilon=0.1)
        mu, sigma = eta_posterior_reg(state, np.ones(1), np.ones(1), np.array([0.5]), hyper)
        assert_allclose(mu, np.zeros(2))
        assert_allclose(sigma, 3.0 * np.eye(2), rtol=1e-12)

    def test_scalar_closed_form(self):
        docs = (Document(0, np.array([0], dtype=np.int32)),)
        corpus = LabeledCorpus(VocabMap.synthetic(1), docs, (1.0,), "regression")
        state = init_assignments(RngState(0), corpus, K=1)
        hyper = Hyperparams(K=1, alpha_k=1.0, nu2=1.0, c=1.0, epsilon=0.0)
        mu, sigma = eta_posterior_reg(state, np.ones(1), np.ones(1), np.array([1.0]), hyper)
        assert_allclose(sigma, [[1.0 / 3.0]], rtol=1e-12)
        assert_allclose(mu, [2.0 / 3.0], rtol=1e-12)

    def test_matches_dense_reference(self):
        gen = np.random.default_rng(1)
        for _ in range(25):
            inst = random_instance(gen, "regression")
            Z = [gen.integers(0, inst.K, size=t.size).astype(np.int32) for t in inst.tokens]
            state = count_state(inst, [z.copy() for z in Z])
            mu, sigma = eta_posterior_reg(
                state, inst.lambdas[0], inst.omegas, inst.labels, inst.hyper
            )
            (mu_ref, sigma_ref), = dense_eta_posterior_reference(inst, Z)
            assert_allclose(mu, mu_ref, rtol=1e-10, atol=1e-12)
            assert_allclose(sigma, sigma_ref, rtol=1e-10, atol=1e-12)

    def test_draw_deterministic(self):
        corpus = synth.regression_corpus(0, n_docs=8, n_per_doc=6)
        state = init_assignments(RngState(0), corpus, K=4)
        hyper = Hyperparams.with_scalar_alpha(K=4, alpha=1.0)
        y = np.array(corpus.responses)
        a = draw_eta_reg(RngState(2), state, np.ones(8), np.ones(8), y, hyper)
        b = draw_eta_reg(RngState(2), state, np.ones(8), np.ones(8), y, hyper)
        assert np.array_equal(a, b)


class TestTokenConditionalReg:
    def _excluded(self, gen, inst):
        Z = [gen.integers(0, inst.K, size=t.size).astype(np.int32) for t in inst.tokens]
        d = int(gen.integers(0, inst.D))
        n = int(gen.integers(0, inst.tokens[d].size))
        state = count_state(inst, [z.copy() for z in Z])
        state.remove_token(d, n)
        return state, Z, d, n

    def test_zero_eta_reduces_to_lda(self):
        gen = np.random.default_rng(3)
        inst = random_instance(gen, "regression")
        state, Z, d, n = self._excluded(gen, inst)
        w = token_conditional_reg(
            state, np.zeros(inst.K), 0.9, 1.1, inst.labels[d], inst.hyper, d, n
        )
        assert np.array_equal(w, lda_token_conditional(state, inst.hyper, d, n))

    def test_zero_c_reduces_to_lda(self):
        gen = np.random.default_rng(4)
        inst = random_instance(gen, "regression")
        hyper0 = replace(inst.hyper, c=0.0)
        state, Z, d, n = self._excluded(gen, inst)
        w = token_conditional_reg(
            state, gen.normal(size=inst.K), 0.9, 1.1, inst.labels[d], hyper0, d, n
        )
        assert np.array_equal(w, lda_token_conditional(state, hyper0, d, n))

    def test_matches_brute_force_oracle(self):
        gen = np.random.default_rng(5)
        for _ in range(40):
            inst = random_instance(gen, "regression")
            state, Z, d, n = self._excluded(gen, inst)
            w = token_conditional_reg(
                state,
                inst.etas[0],
                inst.lambdas[0, d],
                inst.omegas[d],
                inst.labels[d],
                inst.hyper,
                d,
                n,
            )
            expected = brute_force_token_conditional(inst, Z, d, n)
            assert_allclose(w / w.sum(), expected, rtol=1e-10, atol=1e-13)


class TestAugmentationDraws:
    def test_mean_parameters_match_formulas(self):
        # c=1, Delta=2, eps=1: lambda-side mean 1/(c|Delta-eps|) = 1,
        # omega-side mean 1/(c|Delta+eps|) = 1/3.
        n = 500_000
        lam = draw_inverse_lambda_vec(RngState(0), np.full(n, 2.0 - 1.0), 1.0)
        om = draw_inverse_lambda_vec(RngState(1), np.full(n, 2.0 + 1.0), 1.0)
        assert abs((1.0 / lam).mean() - 1.0) < 3 * np.sqrt(1.0 / n)
        third = 1.0 / 3.0
        assert abs((1.0 / om).mean() - third) < 3 * np.sqrt(third**3 / n)

    def test_clamped_at_tube_boundary(self):
        lam = draw_lambda_reg(RngState(2), delta_d=0.5, c=1.0, epsilon=0.5)
        assert np.isfinite(lam) and lam > 0

    def test_moment_check_small_delta(self):
        # c=1, Delta=0.5, eps=0.1: means 1/0.4 and 1/0.6.
        n = 1_000_000
        lam = draw_inverse_lambda_vec(RngState(3), np.full(n, 0.4), 1.0)
        om = draw_inverse_lambda_vec(RngState(4), np.full(n, 0.6), 1.0)
        for draws, mean in ((lam, 2.5), (om, 1.0 / 0.6)):
            se = np.sqrt(mean**3 / n)
            assert abs((1.0 / draws).mean() - mean) < 4 * se

    def test_scalar_wrappers(self):
        assert draw_lambda_reg(RngState(5), 1.0, 1.0, 0.1) > 0
        assert draw_omega_reg(RngState(5), 1.0, 1.0, 0.1) > 0
        with pytest.raises(ValueError):
            draw_lambda_reg(RngState(5), 1.0, 0.0, 0.1)


class TestDualScaleMixture:
    def test_product_form_on_grid(self):
        for delta in (-2.0, -0.5, 0.0, 0.3, 1.0, 2.5):
            for eps in (0.0, 0.1, 0.5, 1.0):
                for c in (0.5, 1.0, 2.0):
                    assert_allclose(
                        dual_scale_mixture_quadrature(delta, eps, c),
                        np.exp(-2.0 * c * max(0.0, abs(delta) - eps)),
                        rtol=1e-6,
                    )


class TestTrainRegression:
    def test_deterministic(self):
        corpus = synth.regression_corpus(0, n_docs=40, n_per_doc=20)
        hyper = Hyperparams.with_scalar_alpha(K=4, alpha=1.0, epsilon=1e-3)
        config = TrainConfig(burn_in=5, hyper=hyper, seed=0)
        _, s1 = train_regression(RngState(1), corpus, config)
        _, s2 = train_regression(RngState(1), corpus, config)
        assert np.array_equal(s1.etas, s2.etas)
        assert np.array_equal(s1.phi_hat, s2.phi_hat)

    def test_training_fit_with_cross_validated_c(self):
        from marginlda.regression import select_c_by_cv

        corpus = synth.regression_corpus(1, n_docs=120, n_per_doc=50)
        hyper = Hyperparams.with_scalar_alpha(K=4, alpha=1.0, epsilon=1e-3)
        config = TrainConfig(burn_in=10, hyper=hyper, seed=0)
        c = select_c_by_cv(corpus, config)
        assert c in (1.0 / 16.0, 0.25, 1.0, 4.0, 16.0)
        tuned = TrainConfig(burn_in=10, hyper=replace(hyper, c=c), seed=0)
        state, _ = train_regression(RngState(1), corpus, tuned)
        assert state.history[-1][2] >= 0.8

    def test_rejects_wrong_task(self):
        corpus = synth.binary_corpus(0, n_docs=10)
        hyper = Hyperparams.with_scalar_alpha(K=4, alpha=1.0)
        with pytest.raises(ValueError, match="regression"):
            train_regression(RngState(0), corpus, TrainConfig(burn_in=1, hyper=hyper))

    def test_jensen_bound_on_trace(self):
        corpus = synth.regression_corpus(2, n_docs=50, n_per_doc=25)
        hyper = Hyperparams.with_scalar_alpha(K=4, alpha=1.0, epsilon=0.05)
        config = TrainConfig(burn_in=20, hyper=hyper, seed=0, record_trace=True)
        state, _ = train_regression(RngState(2), corpus, config)
        y = np.array(corpus.responses)
        deltas = np.array([y - zb @ etas[0] for etas, zb in state.trace])
        mean_loss = np.mean(
            [np.maximum(0.0, np.abs(row) - hyper.epsilon).sum() for row in deltas]
        )
        loss_of_mean = np.maximum(0.0, np.abs(deltas.mean(axis=0)) - hyper.epsilon).sum()
        assert mean_loss >= loss_of_mean - 1e-9
