import math

import numpy as np
import pytest
from scipy.special import kolmogi
from scipy.stats import chi2, kstest

from flexem.elliptic import Gaussian, MixtureModel, StudentT
from flexem.estimators import (
    DegenerateClusterError,
    FixedPointConfig,
    estimate_tau,
    fixed_point_mu_sigma,
    mahalanobis_sq,
    tyler_estimator,
    update_pi,
)


def naive_quadform(x, mu, sigma_inv):
    d = x - mu
    total = 0.0
    for i in range(len(d)):
        for j in range(len(d)):
            total += d[i] * sigma_inv[i, j] * d[j]
    return total


class TestMahalanobis:
    def test_zero_at_mean(self):
        assert mahalanobis_sq(np.ones(3), np.ones(3), np.eye(3)) == 0.0

    def test_unit_offset(self):
        for m in (2, 5, 9):
            x = np.zeros(m)
            x[0] = 1.0
            assert mahalanobis_sq(x, np.zeros(m), np.eye(m)) == 1.0

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.standard_normal((5, 5))
            sigma_inv = a @ a.T + 5 * np.eye(5)
            x, mu = rng.standard_normal(5), rng.standard_normal(5)
            assert mahalanobis_sq(x, mu, sigma_inv) == pytest.approx(
                naive_quadform(x, mu, sigma_inv), abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mahalanobis_sq(np.zeros(3), np.zeros(3), np.eye(4))


def single_cluster_model(mu, sigma):
    return MixtureModel(np.array([1.0]), mu[None, :], sigma[None, :, :])


class TestEstimateTau:
    def test_floor_at_the_mean(self):
        model = single_cluster_model(np.zeros(4), np.eye(4))
        tau = estimate_tau(np.zeros((1, 4)), model, Gaussian())
        assert tau[0, 0] == 1e-12

    def test_gaussian_divides_by_m(self):
        x = np.zeros((1, 4))
        x[0, 0] = 1.0
        model = single_cluster_model(np.zeros(4), np.eye(4))
        tau = estimate_tau(x, model, Gaussian())
        assert tau[0, 0] == pytest.approx(0.25)

    def test_student_uses_argsup(self):
        x = np.zeros((1, 8))
        x[0, 0] = 4.0  # quadratic form 16
        model = single_cluster_model(np.zeros(8), np.eye(8))
        tau = estimate_tau(x, model, StudentT(3.0))
        assert tau[0, 0] == pytest.approx(2.0)

    def test_chi2_law_with_known_parameters(self):
        # with true (mu, Sigma), m tau/tau_true is exactly chi^2(m) for
        # Gaussian data; the KS statistic must clear the 1% critical value
        m, n, tau_true = 20, 5000, 1.7
        rng = np.random.default_rng(21)
        x = math.sqrt(tau_true) * rng.standard_normal((n, m))
        model = single_cluster_model(np.zeros(m), np.eye(m))
        tau = estimate_tau(x, model, Gaussian())[:, 0]
        stat = kstest(m * tau / tau_true, chi2(m).cdf).statistic
        assert stat < kolmogi(0.01) / math.sqrt(n)
        assert np.var(tau - tau_true, ddof=1) == pytest.approx(
            2 * tau_true**2 / m, rel=0.4)

    def test_variance_shrinks_with_dimension(self):
        # var(tau_hat - tau) follows the 2 tau^2 / m law, so m=10 vs m=50
        # should shrink by roughly 5
        rng = np.random.default_rng(5)
        variances = {}
        for m in (10, 50):
            n = m * (2 * m - 1) + 100
            x = rng.standard_normal((n, m))
            model = single_cluster_model(np.zeros(m), np.eye(m))
            tau = estimate_tau(x, model, Gaussian())[:, 0]
            variances[m] = np.var(tau - 1.0, ddof=1)
        ratio = variances[10] / variances[50]
        assert 3.0 <= ratio <= 8.0


class TestUpdatePi:
    def test_hard_assignment(self):
        P = np.tile([1.0, 0.0], (6, 1))
        assert np.allclose(update_pi(P), [1.0, 0.0])

    def test_uniform(self):
        P = np.full((4, 2), 0.5)
        assert np.allclose(update_pi(P), [0.5, 0.5])

    def test_matches_summation_oracle(self):
        rng = np.random.default_rng(3)
        raw = rng.uniform(size=(7, 3))
        P = raw / raw.sum(axis=1, keepdims=True)
        expected = [sum(P[i, k] for i in range(7)) / 7 for k in range(3)]
        assert np.allclose(update_pi(P), expected)
        assert update_pi(P).sum() == pytest.approx(1.0)


class TestFixedPoint:
    def test_one_point_cluster_degenerates(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((50, 3))
        p = np.zeros(50)
        p[0] = 1.0
        with pytest.raises(DegenerateClusterError):
            fixed_point_mu_sigma(X, p, np.zeros(3), np.eye(3))

    def test_gaussian_consistency(self):
        rng = np.random.default_rng(8)
        n, m = 2000, 10
        X = rng.standard_normal((n, m))
        cfg = FixedPointConfig(max_iters=100, tol=1e-9)
        res = fixed_point_mu_sigma(X, np.full(n, 1.0 / n), np.zeros(m), np.eye(m), cfg)
        assert np.linalg.norm(res.mu) < 0.15
        # Frobenius error normalised by the matrix size m^2
        assert np.linalg.norm(res.sigma - np.eye(m), "fro") / m**2 < 0.01

    def test_uniform_weights_reduce_to_tyler(self):
        rng = np.random.default_rng(4)
        n, m = 400, 5
        X = rng.standard_normal((n, m)) @ np.diag([2.0, 1.0, 1.0, 0.5, 1.5])
        mu = X.mean(axis=0)
        cfg = FixedPointConfig(max_iters=500, tol=1e-12)
        res = fixed_point_mu_sigma(X, np.full(n, 1.0 / n), mu, np.eye(m), cfg,
                                   fix_mu=True)
        reference = tyler_estimator(X, mu, iters=500, tol=1e-12)
        assert np.linalg.norm(res.sigma - reference, "fro") < 1e-8

    @pytest.mark.parametrize("version", [1, 2, 3, 4])
    def test_trace_symmetry_spd(self, version):
        rng = np.random.default_rng(version)
        n, m = 300, 4
        X = rng.standard_normal((n, m)) + 0.5
        p = rng.uniform(0.1, 1.0, size=n)
        cfg = FixedPointConfig(version=version)
        res = fixed_point_mu_sigma(X, p, X.mean(axis=0), np.eye(m), cfg)
        assert np.trace(res.sigma) == pytest.approx(m, rel=1e-10)
        assert np.array_equal(res.sigma, res.sigma.T)
        assert np.linalg.eigvalsh(res.sigma).min() > 0

    @pytest.mark.parametrize("version", [1, 2, 3, 4])
    def test_scale_equivariance(self, version):
        rng = np.random.default_rng(10 + version)
        n, m, c = 200, 3, 7.5
        X = rng.standard_normal((n, m)) + 1.0
        p = rng.uniform(0.2, 1.0, size=n)
        cfg = FixedPointConfig(version=version, max_iters=50, tol=1e-10)
        base = fixed_point_mu_sigma(X, p, X.mean(axis=0), np.eye(m), cfg)
        scaled = fixed_point_mu_sigma(c * X, p, c * X.mean(axis=0), np.eye(m), cfg)
        assert np.allclose(scaled.mu, c * base.mu, rtol=1e-8, atol=1e-8)
        assert np.linalg.norm(scaled.sigma - base.sigma, "fro") < 1e-8

    def test_zero_responsibility_rejected(self):
        X = np.zeros((10, 2))
        with pytest.raises(DegenerateClusterError):
            fixed_point_mu_sigma(X, np.zeros(10), np.zeros(2), np.eye(2))


class TestTyler:
    def test_rank_deficient_errors(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [2.0, 0.0], [-3.0, 0.0]])
        with pytest.raises(DegenerateClusterError):
            tyler_estimator(X, np.zeros(2), iters=50)

    def test_needs_more_points_than_dimensions(self):
        with pytest.raises(ValueError):
            tyler_estimator(np.eye(3), np.zeros(3))

    def test_recovers_diagonal_shape(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((5000, 2)) @ np.diag([2.0, 1.0])  # cov diag(4, 1)
        sigma = tyler_estimator(X, np.zeros(2), iters=200, tol=1e-12)
        expected = np.diag([1.6, 0.4])  # diag(4, 1) rescaled to trace 2
        assert np.abs(sigma - expected).max() < 0.05

    def test_scale_invariance(self):
        rng = np.random.default_rng(13)
        X = rng.standard_normal((300, 4))
        a = tyler_estimator(X, np.zeros(4), iters=100, tol=1e-12)
        b = tyler_estimator(10.0 * X, np.zeros(4), iters=100, tol=1e-12)
        assert np.abs(a - b).max() < 1e-10
