"""Sampler statistics and determinism for the random-variate toolkit."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import ks_2samp

from marginlda.randkit import (
    RngState,
    cholesky_with_jitter,
    sample_categorical,
    sample_gig_half,
    sample_inverse_gaussian,
    sample_mvn,
)

N_DRAWS = 1_000_000


def ig_raw_moment(mu: float, lam: float, r: int) -> float:
    """Analytic raw moment of IG(mu, lam) via the finite Bessel series:
    E[X^r] = mu^r * sum_s (r-1+s)! / (s! (r-1-s)!) * (mu / (2 lam))^s."""
    import math

    total = 0.0
    for s in range(r):
        coeff = math.factorial(r - 1 + s) / (
            math.factorial(s) * math.factorial(r - 1 - s)
        )
        total += coeff * (mu / (2.0 * lam)) ** s
    return mu**r * total


class TestRngState:
    def test_identical_seeds_identical_sequences(self):
        a, b = RngState(123), RngState(123)
        assert np.array_equal(a.uniform(100), b.uniform(100))
        assert np.array_equal(a.standard_normal(100), b.standard_normal(100))

    def test_child_streams_do_not_depend_on_parent_consumption(self):
        parent1 = RngState(7)
        parent1.uniform(1000)
        parent2 = RngState(7)
        assert np.array_equal(parent1.child(3).uniform(10), parent2.child(3).uniform(10))

    def test_sibling_streams_differ(self):
        root = RngState(7)
        assert not np.array_equal(root.child(0).uniform(10), root.child(1).uniform(10))


class TestCategorical:
    def test_fair_coin_frequency(self):
        draws = sample_categorical(RngState(0), [1.0, 1.0], size=N_DRAWS)
        se = np.sqrt(0.25 / N_DRAWS)
        assert abs(np.mean(draws == 0) - 0.5) < 3 * se

    def test_zero_weight_never_drawn(self):
        draws = sample_categorical(RngState(1), [0.0, 5.0], size=10_000)
        assert np.all(draws == 1)

    def test_three_way_frequencies(self):
        draws = sample_categorical(RngState(2), [2.0, 1.0, 1.0], size=N_DRAWS)
        freqs = np.bincount(draws, minlength=3) / N_DRAWS
        for freq, p in zip(freqs, (0.5, 0.25, 0.25)):
            se = np.sqrt(p * (1 - p) / N_DRAWS)
            assert abs(freq - p) < 3 * se

    @pytest.mark.parametrize(
        "weights", [[0.0, 0.0], [-1.0, 2.0], [np.nan, 1.0], [np.inf, 1.0], []]
    )
    def test_invalid_weights_rejected(self, weights):
        with pytest.raises(ValueError):
            sample_categorical(RngState(0), weights)

    def test_scalar_draw_deterministic(self):
        assert sample_categorical(RngState(5), [1.0, 2.0, 3.0]) == sample_categorical(
            RngState(5), [1.0, 2.0, 3.0]
        )


class TestInverseGaussian:
    def test_mean_example_a2_b1(self):
        x = sample_inverse_gaussian(RngState(10), 2.0, 1.0, size=N_DRAWS)
        assert abs(x.mean() - 2.0) < 3 * np.sqrt(8.0 / N_DRAWS)

    def test_mean_example_a1_b1(self):
        x = sample_inverse_gaussian(RngState(11), 1.0, 1.0, size=N_DRAWS)
        assert abs(x.mean() - 1.0) < 0.003

    @pytest.mark.parametrize("a", [0.25, 1.0, 4.0])
    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_moment_grid(self, a, b):
        x = sample_inverse_gaussian(RngState(hash((a, b)) % 2**32), a, b, size=N_DRAWS)
        m1, m2 = ig_raw_moment(a, b, 1), ig_raw_moment(a, b, 2)
        m4 = ig_raw_moment(a, b, 4)
        se_mean = np.sqrt((m2 - m1**2) / N_DRAWS)
        se_second = np.sqrt((m4 - m2**2) / N_DRAWS)
        assert abs(x.mean() - m1) < 4 * se_mean
        assert abs(np.mean(x**2) - m2) < 4 * se_second

    def test_all_draws_positive(self):
        x = sample_inverse_gaussian(RngState(12), 0.25, 2.0, size=100_000)
        assert np.all(x > 0)

    @pytest.mark.parametrize("a,b", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (np.inf, 1.0), (1.0, np.nan)])
    def test_invalid_parameters_rejected(self, a, b):
        with pytest.raises(ValueError):
            sample_inverse_gaussian(RngState(0), a, b)


class TestGigHalf:
    def test_reciprocal_mean_b4(self):
        g = sample_gig_half(RngState(20), 4.0, size=N_DRAWS)
        recip = 1.0 / g
        se = np.sqrt((ig_raw_moment(0.5, 1.0, 2) - 0.25) / N_DRAWS)
        assert abs(recip.mean() - 0.5) < 3 * se

    def test_reciprocal_mean_b1(self):
        g = sample_gig_half(RngState(21), 1.0, size=N_DRAWS)
        assert abs((1.0 / g).mean() - 1.0) < 3 * np.sqrt(1.0 / N_DRAWS)

    def test_all_draws_positive(self):
        g = sample_gig_half(RngState(22), 0.3, size=100_000)
        assert np.all(g > 0)

    def test_reciprocity_against_direct_ig(self):
        """1 / GIG(1/2, 1, b) draws match IG(1/sqrt(b), 1) draws (KS test)."""
        b = 4.0
        recip = 1.0 / sample_gig_half(RngState(23), b, size=200_000)
        direct = sample_inverse_gaussian(RngState(24), 1.0 / np.sqrt(b), 1.0, size=200_000)
        assert ks_2samp(recip, direct).pvalue > 0.001

    def test_invalid_parameter_rejected(self):
        with pytest.raises(ValueError):
            sample_gig_half(RngState(0), 0.0)


class TestCholeskyWithJitter:
    def test_identity_needs_no_jitter(self):
        factor = cholesky_with_jitter(np.eye(3))
        assert factor.jitter_applied == 0.0
        assert_allclose(factor.L, np.eye(3))

    def test_2x2_hand_factorization(self):
        factor = cholesky_with_jitter(np.array([[4.0, 2.0], [2.0, 3.0]]))
        assert_allclose(factor.L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-14)

    def test_slightly_indefinite_matrix_gets_small_jitter(self):
        theta = 0.3
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        a = rot @ np.diag([1.0, -1e-12]) @ rot.T
        a = 0.5 * (a + a.T)
        factor = cholesky_with_jitter(a)
        assert 0.0 < factor.jitter_applied <= 1e-4
        recon = factor.L @ factor.L.T
        target = a + factor.jitter_applied * np.eye(2)
        assert np.linalg.norm(recon - target) <= 1e-8 * np.linalg.norm(target)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            cholesky_with_jitter(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_failure_at_cap(self):
        with pytest.raises(ValueError, match="jitter cap"):
            cholesky_with_jitter(-np.eye(2))


class TestSampleMvn:
    def test_standard_normal_moments(self):
        draws = sample_mvn(RngState(30), np.zeros(3), np.eye(3), size=100_000)
        assert np.all(np.abs(draws.mean(axis=0)) < 0.01)
        cov = np.cov(draws.T)
        off = cov - np.diag(np.diag(cov))
        assert np.max(np.abs(off)) < 0.015

    def test_zero_covariance_returns_mean_exactly(self):
        mu = np.array([1.5, -2.0])
        assert np.array_equal(sample_mvn(RngState(31), mu, np.zeros((2, 2))), mu)

    def test_diagonal_stds(self):
        mu = np.array([1.0, 2.0])
        draws = sample_mvn(RngState(32), mu, np.diag([4.0, 9.0]), size=100_000)
        for j, sd in enumerate((2.0, 3.0)):
            se = sd / np.sqrt(2.0 * (100_000 - 1))
            assert abs(draws[:, j].std(ddof=1) - sd) < 3 * se

    def test_affine_covariance_matches_llt(self):
        l_fixed = np.array([[1.0, 0.0, 0.0], [0.5, 2.0, 0.0], [-0.3, 0.1, 0.7]])
        sigma = l_fixed @ l_fixed.T
        draws = sample_mvn(RngState(33), np.zeros(3), sigma, size=200_000)
        assert np.max(np.abs(np.cov(draws.T) - sigma)) < 0.03
