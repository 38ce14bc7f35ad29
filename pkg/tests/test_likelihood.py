import math

import numpy as np
import pytest
from scipy.integrate import quad

from groupedsae import (
    GroupedSample,
    Hyperparameters,
    RandomEffects,
    Thresholds,
    complete_loglik,
    group_probs,
    log_group_probs,
    log_pmf,
    log_prior_u,
)
from groupedsae.transform import BoxCox
from _oracles import all_count_vectors, multinomial_log_pmf, transformed_normal_class_probs


@pytest.fixture
def th5():
    return Thresholds(np.array([3.0, 5.0, 7.0, 10.0]))


class TestGroupProbs:
    def test_symmetry_two_classes(self):
        th = Thresholds(np.array([4.0]))
        mu = BoxCox(0.0).forward(4.0)
        for sigma2 in (0.25, 1.0, 9.0):
            p = group_probs(mu, sigma2, 0.0, th)
            np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-14)

    def test_standard_normal_cut_at_one(self):
        th = Thresholds(np.array([1.0]))
        p = group_probs(0.0, 1.0, 0.0, th)
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-14)

    def test_lognormal_vector_against_quadrature(self, th5):
        p = group_probs(1.0, 4.0, 0.0, th5)
        oracle = transformed_normal_class_probs(1.0, 2.0, 0.0, th5.cuts)
        np.testing.assert_allclose(p, oracle, atol=1e-8)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_positive_kappa_total_below_one(self, th5):
        p = group_probs(0.0, 4.0, 0.5, th5)
        assert p.sum() < 1.0
        p_renorm = group_probs(0.0, 4.0, 0.5, th5, renormalize=True)
        assert p_renorm.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(p_renorm, p / p.sum(), rtol=1e-12)

    def test_monotone_shift(self, th5):
        mus = np.linspace(-2, 4, 50)
        p = group_probs(mus, 1.0, 0.0, th5)
        assert np.all(np.diff(p[:, 0]) < 0)
        assert np.all(np.diff(p[:, -1]) > 0)

    def test_scale_flattening(self, th5):
        p = group_probs(1.0, np.array([1.0, 1e2, 1e4, 1e6]), 0.0, th5)
        for g in range(1, 4):
            assert np.all(np.diff(p[:, g]) < 0)
        assert p[-1, 1:4].max() < 1e-2

    def test_log_matches_linear(self, th5):
        rng = np.random.default_rng(2)
        mu = rng.normal(1.0, 1.0, 30)
        s2 = rng.uniform(0.1, 4.0, 30)
        lp = log_group_probs(mu, s2, 0.3, th5)
        np.testing.assert_allclose(np.exp(lp), group_probs(mu, s2, 0.3, th5), rtol=1e-12)

    def test_deep_tail_log_is_finite(self, th5):
        lp = log_group_probs(-30.0, 1.0, 0.0, th5)
        assert np.all(np.isfinite(lp[1:]))
        assert lp[-1] < -500


class TestLogPmf:
    def test_single_class_power(self, th5):
        counts = np.array([7, 0, 0, 0, 0])
        lp = log_group_probs(1.0, 1.0, 0.0, th5)
        want = 7 * lp[0]
        assert log_pmf(counts, 1.0, 1.0, 0.0, th5) == pytest.approx(want, rel=1e-12)

    def test_empty_sample_is_zero(self, th5):
        assert log_pmf(np.zeros(5, dtype=int), 1.0, 1.0, 0.0, th5) == 0.0

    def test_two_one_split(self):
        # probs (0.5, 0.5): mass = 3 * 0.125
        th = Thresholds(np.array([1.0]))
        val = log_pmf(np.array([2, 1]), 0.0, 1.0, 0.0, th)
        assert val == pytest.approx(math.log(0.375), abs=1e-12)

    def test_exhaustive_enumeration_oracle(self):
        th = Thresholds(np.array([2.0, 6.0]))
        mu, sigma2, kappa = 1.1, 0.8, 0.0
        probs = group_probs(mu, sigma2, kappa, th)
        for n in range(0, 7):
            for counts in all_count_vectors(n, 3):
                got = float(log_pmf(np.array(counts), mu, sigma2, kappa, th))
                want = multinomial_log_pmf(counts, probs)
                assert got == pytest.approx(want, abs=1e-10)

    def test_zero_prob_observed_class(self):
        th = Thresholds(np.array([2.0, 6.0]))
        # variance so small that distant classes underflow to exactly zero mass
        lp = log_group_probs(0.1, 1e-310, 0.0, th)
        assert lp[2] == -np.inf
        val = log_pmf(np.array([0, 0, 3]), 0.1, 1e-310, 0.0, th)
        assert val == -np.inf
        # but unobserved zero-probability classes contribute nothing
        val2 = log_pmf(np.array([3, 0, 0]), 0.1, 1e-310, 0.0, th)
        assert np.isfinite(val2)

    def test_extreme_tail_stays_finite(self):
        # far-tail class masses remain representable in the log domain
        th = Thresholds(np.array([2.0, 6.0]))
        lp = log_group_probs(-60.0, 0.01, 0.5, th)
        assert np.all(np.isfinite(lp))
        assert lp[2] < -1e5


class TestLogPriorU:
    def test_invgamma_prior_mean_is_phi(self):
        # IG(lam/2+1, lam*phi/2) has mean phi; check by quadrature
        psi = Hyperparameters(
            beta=np.array([0.0]), tau2=1.0, lam=3.0, kappa=0.0, gamma=np.array([0.4])
        )
        phi = float(np.exp(0.4))
        norm_const, _ = quad(
            lambda s2: np.exp(log_prior_u(0.0, s2, psi, np.array([1.0]))), 0, np.inf,
            limit=200,
        )
        mean, _ = quad(
            lambda s2: s2 * np.exp(log_prior_u(0.0, s2, psi, np.array([1.0]))), 0, np.inf,
            limit=200,
        )
        assert mean / norm_const == pytest.approx(phi, rel=1e-6)

    def test_normal_term_at_zero(self):
        psi = Hyperparameters(
            beta=np.array([0.0]), tau2=1.0, lam=2.0, kappa=0.0, gamma=np.array([0.0])
        )
        # subtract the sigma2 part evaluated separately
        from groupedsae._normal import invgamma_logpdf

        total = log_prior_u(0.0, 1.0, psi, np.array([1.0]))
        ig = invgamma_logpdf(1.0, 2.0, 1.0)
        assert total - ig == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)

    def test_density_integrates_to_one(self):
        psi = Hyperparameters(
            beta=np.array([0.0]), tau2=0.5, lam=2.0, kappa=0.0, gamma=np.array([0.0])
        )

        def marginal_s2(s2):
            return np.exp(log_prior_u(0.0, s2, psi, np.array([1.0]))) * math.sqrt(
                2 * math.pi * psi.tau2
            )

        total, _ = quad(marginal_s2, 0, np.inf, limit=200)
        assert total == pytest.approx(1.0, abs=1e-6)


class TestCompleteLoglik:
    def test_single_area_is_sum_of_terms(self, th5):
        psi = Hyperparameters(
            beta=np.array([1.0]), tau2=0.1, lam=4.0, kappa=0.0, gamma=np.array([-0.5])
        )
        y = GroupedSample([4, 3, 2, 1, 0])
        u = RandomEffects(b=0.2, sigma2=0.6)
        x = np.array([1.0])
        got = complete_loglik([y], [u], psi, [x], th5)
        want = float(log_pmf(y.counts, 1.2, 0.6, 0.0, th5)) + float(
            log_prior_u(0.2, 0.6, psi, x)
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_identical_areas_scale_linearly(self, th5):
        psi = Hyperparameters(
            beta=np.array([1.0]), tau2=0.1, lam=4.0, kappa=0.0, gamma=np.array([-0.5])
        )
        y = GroupedSample([4, 3, 2, 1, 0])
        u = RandomEffects(b=0.2, sigma2=0.6)
        x = np.array([1.0])
        one = complete_loglik([y], [u], psi, [x], th5)
        five = complete_loglik([y] * 5, [u] * 5, psi, [x] * 5, th5)
        assert five == pytest.approx(5 * one, rel=1e-12)

    def test_heterogeneous_sum(self, th5):
        psi = Hyperparameters(
            beta=np.array([1.0, 0.5]), tau2=0.1, lam=4.0, kappa=0.1, gamma=np.array([-0.5, 0.2])
        )
        ys = [GroupedSample([4, 3, 2, 1, 0]), GroupedSample([0, 1, 2, 3, 14])]
        us = [RandomEffects(0.2, 0.6), RandomEffects(-0.1, 1.4)]
        xs = [np.array([1.0, -0.3]), np.array([1.0, 0.8])]
        got = complete_loglik(ys, us, psi, xs, th5)
        want = 0.0
        for y, u, x in zip(ys, us, xs):
            mu = float(x @ psi.beta) + u.b
            want += float(log_pmf(y.counts, mu, u.sigma2, psi.kappa, th5))
            want += float(log_prior_u(u.b, u.sigma2, psi, x))
        assert got == pytest.approx(want, rel=1e-12)
