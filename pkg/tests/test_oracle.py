"""Self-checks for the reference implementations.

The brute-force conditional is the correctness anchor for the trainers,
so it gets validated independently here: against the analytic collapsed
LDA conditional when supervision is off, against direct log-density
differences, and (for the classifier posteriors) against density ratios
of the joint itself.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from marginlda.oracle import (
    TinyInstance,
    brute_force_token_conditional,
    count_state,
    dense_eta_posterior_reference,
    dual_scale_mixture_quadrature,
    joint_log_density,
    quadrature_scale_mixture,
    random_instance,
)
from marginlda.topic_state import Hyperparams


def draw_z(gen, instance):
    return [gen.integers(0, instance.K, size=t.size).astype(np.int32) for t in instance.tokens]


class TestJointLogDensity:
    def test_c_zero_reduces_to_collapsed_lda(self):
        """With c = 0 the augmentation factor no longer depends on Z, so
        the brute-force conditional equals the analytic LDA conditional."""
        gen = np.random.default_rng(0)
        for _ in range(25):
            inst = random_instance(gen, "binary", c=0.0)
            Z = draw_z(gen, inst)
            d = int(gen.integers(0, inst.D))
            n = int(gen.integers(0, inst.tokens[d].size))
            state = count_state(inst, Z)
            state.remove_token(d, n)
            t = int(inst.tokens[d][n])
            h = inst.hyper
            w = (
                (state.ckt[:, t] + h.beta_t)
                * (state.cdk[d] + h.alpha_k)
                / (state.ck + inst.V * h.beta_t)
            )
            assert_allclose(
                brute_force_token_conditional(inst, Z, d, n), w / w.sum(), rtol=1e-12
            )

    @pytest.mark.parametrize("kind", ["binary", "multitask", "regression"])
    def test_token_swap_difference_matches_conditional_ratio(self, kind):
        gen = np.random.default_rng(1)
        for _ in range(10):
            inst = random_instance(gen, kind)
            Z = draw_z(gen, inst)
            d = int(gen.integers(0, inst.D))
            n = int(gen.integers(0, inst.tokens[d].size))
            p = brute_force_token_conditional(inst, Z, d, n)
            Z[d][n] = 0
            log_a = joint_log_density(inst, Z)
            Z[d][n] = inst.K - 1
            log_b = joint_log_density(inst, Z)
            assert_allclose(log_a - log_b, math.log(p[0] / p[-1]), rtol=1e-9, atol=1e-9)

    def test_single_topic_density_is_finite(self):
        gen = np.random.default_rng(2)
        tokens = (np.array([0, 1], dtype=np.int32), np.array([2], dtype=np.int32))
        inst = TinyInstance(
            tokens=tokens, K=1, V=3,
            hyper=Hyperparams(K=1, alpha_k=1.0, beta_t=0.01, c=1.0, ell=2.0),
            kind="binary",
            etas=gen.normal(size=(1, 1)),
            lambdas=np.ones((1, 2)),
            labels=np.array([[1.0, -1.0]]),
        )
        Z = [np.zeros(2, dtype=np.int32), np.zeros(1, dtype=np.int32)]
        assert math.isfinite(joint_log_density(inst, Z))

    def test_caps_enforced(self):
        with pytest.raises(ValueError, match="cap"):
            TinyInstance(
                tokens=tuple(np.zeros(1, dtype=np.int32) for _ in range(6)),
                K=2, V=3, hyper=Hyperparams(K=2, alpha_k=1.0), kind="binary",
                etas=np.zeros((1, 2)), lambdas=np.ones((1, 6)),
                labels=np.ones((1, 6)),
            )


class TestScaleMixtureQuadrature:
    def test_nonpositive_zeta_gives_one(self):
        for zeta in (-3.0, -1.0, 0.0):
            for c in (0.5, 1.0, 2.0):
                assert_allclose(quadrature_scale_mixture(zeta, c), 1.0, rtol=1e-6)

    def test_half_margin_example(self):
        assert_allclose(quadrature_scale_mixture(0.5, 1.0), math.exp(-1.0), rtol=1e-9)

    def test_deep_margin_example(self):
        assert_allclose(quadrature_scale_mixture(3.0, 2.0), math.exp(-12.0), rtol=1e-7)

    def test_full_grid_against_closed_form(self):
        for zeta in (-3.0, -1.0, 0.0, 0.5, 1.0, 3.0):
            for c in (0.5, 1.0, 2.0):
                assert_allclose(
                    quadrature_scale_mixture(zeta, c),
                    math.exp(-2.0 * c * max(0.0, zeta)),
                    rtol=1e-6,
                )

    def test_dual_grid_against_closed_form(self):
        for delta in (-2.5, -1.0, -0.3, 0.0, 0.4, 1.0, 2.0):
            for eps in (0.0, 0.1, 0.5, 1.0):
                for c in (0.5, 1.0, 2.0):
                    assert_allclose(
                        dual_scale_mixture_quadrature(delta, eps, c),
                        math.exp(-2.0 * c * max(0.0, abs(delta) - eps)),
                        rtol=1e-6,
                    )


class TestDenseEtaPosterior:
    def test_binary_scalar_example(self):
        # K=1, one doc, zbar=1, lambda=1, c=1, ell=1, y=+1, nu2=1.
        inst = TinyInstance(
            tokens=(np.array([0], dtype=np.int32),),
            K=1, V=1,
            hyper=Hyperparams(K=1, alpha_k=1.0, c=1.0, ell=1.0, nu2=1.0),
            kind="binary",
            etas=np.zeros((1, 1)),
            lambdas=np.ones((1, 1)),
            labels=np.array([[1.0]]),
        )
        Z = [np.zeros(1, dtype=np.int32)]
        (mu, sigma), = dense_eta_posterior_reference(inst, Z)
        assert_allclose(sigma, [[0.5]], rtol=1e-14)
        assert_allclose(mu, [1.0], rtol=1e-14)

    def test_regression_scalar_example(self):
        # K=1, one doc, zbar=1, lambda=omega=1, c=1, eps=0, y=1, nu2=1:
        # rho=2, psi=2, Sigma=1/3, mu=2/3.
        inst = TinyInstance(
            tokens=(np.array([0], dtype=np.int32),),
            K=1, V=1,
            hyper=Hyperparams(K=1, alpha_k=1.0, c=1.0, epsilon=0.0, nu2=1.0),
            kind="regression",
            etas=np.zeros((1, 1)),
            lambdas=np.ones((1, 1)),
            labels=np.array([1.0]),
            omegas=np.ones(1),
        )
        Z = [np.zeros(1, dtype=np.int32)]
        (mu, sigma), = dense_eta_posterior_reference(inst, Z)
        assert_allclose(sigma, [[1.0 / 3.0]], rtol=1e-14)
        assert_allclose(mu, [2.0 / 3.0], rtol=1e-14)

    @pytest.mark.parametrize("kind", ["binary", "multitask", "regression"])
    def test_posterior_matches_joint_density_ratios(self, kind):
        """The Gaussian (mu, Sigma) must reproduce the joint's own
        log-density differences under classifier perturbations.  This
        pins the linear coefficient (c^2 psi for regression) directly
        to the augmented joint rather than to any printed formula."""
        gen = np.random.default_rng(3)
        for _ in range(8):
            inst = random_instance(gen, kind)
            Z = draw_z(gen, inst)
            posteriors = dense_eta_posterior_reference(inst, Z)
            for i, (mu, sigma) in enumerate(posteriors):
                prec = np.linalg.inv(sigma)
                eta1 = gen.normal(size=inst.K)
                eta2 = gen.normal(size=inst.K)

                def with_eta(eta_i):
                    etas = inst.etas.copy()
                    etas[i] = eta_i
                    return TinyInstance(
                        tokens=inst.tokens, K=inst.K, V=inst.V, hyper=inst.hyper,
                        kind=inst.kind, etas=etas, lambdas=inst.lambdas,
                        labels=inst.labels, omegas=inst.omegas,
                    )

                joint_diff = joint_log_density(with_eta(eta1), Z) - joint_log_density(
                    with_eta(eta2), Z
                )
                gauss_diff = -0.5 * (
                    (eta1 - mu) @ prec @ (eta1 - mu) - (eta2 - mu) @ prec @ (eta2 - mu)
                )
                assert_allclose(joint_diff, gauss_diff, rtol=1e-8, atol=1e-8)
