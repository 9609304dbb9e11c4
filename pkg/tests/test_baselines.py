import numpy as np
import pytest

from flexem.baselines import gmm_em, kmeans
from flexem.elliptic import builtin_setup, generate_setup
from flexem.fem import FitConfig
from flexem.metrics import ari


class TestKMeans:
    def test_k_equals_n(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 2)) * 5
        res = kmeans(X, 6, seed=0)
        assert res.inertia == pytest.approx(0.0, abs=1e-20)
        assert len(set(res.labels.tolist())) == 6

    def test_two_separated_pairs(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        res = kmeans(X, 2, seed=1)
        centers = res.centers[np.argsort(res.centers[:, 0])]
        assert np.allclose(centers, [[0.0, 0.5], [10.0, 0.5]])

    def test_inertia_trace_nonincreasing(self):
        rng = np.random.default_rng(2)
        X = np.vstack([rng.standard_normal((100, 3)),
                       rng.standard_normal((100, 3)) + 4.0])
        res = kmeans(X, 2, seed=2)
        trace = np.array(res.inertia_trace)
        assert np.all(np.diff(trace) <= 1e-9)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((120, 4))
        a = kmeans(X, 3, seed=7)
        b = kmeans(X, 3, seed=7)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.centers, b.centers)

    def test_needs_enough_points(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((2, 2)), 3)

    def test_every_cluster_nonempty(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((50, 2))
        res = kmeans(X, 5, seed=0)
        assert np.bincount(res.labels, minlength=5).min() >= 1


class TestGmmEm:
    def test_well_separated_spherical_clusters(self):
        rng = np.random.default_rng(5)
        X = np.vstack([rng.standard_normal((200, 3)) + offset
                       for offset in (0.0, 8.0, 16.0)])
        truth = np.repeat([0, 1, 2], 200)
        report = gmm_em(X, 3, FitConfig(seed=0))
        assert ari(truth, report.labels) >= 0.99

    def test_k1_closed_form(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((300, 4)) @ np.diag([1.0, 2.0, 0.5, 1.5]) + 2.0
        report = gmm_em(X, 1, FitConfig(seed=0))
        assert np.allclose(report.model.mu[0], X.mean(axis=0), rtol=0, atol=1e-12)
        assert np.allclose(report.model.sigma[0], np.cov(X.T, bias=True),
                           rtol=0, atol=1e-10)

    def test_loglik_nondecreasing(self):
        sample = generate_setup(builtin_setup(4), np.random.default_rng(7))
        report = gmm_em(sample.data, 3, FitConfig(seed=1))
        trace = np.array(report.loglik_trace)
        diffs = np.diff(trace)
        assert np.all(diffs >= -1e-8 * np.abs(trace[:-1]))

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        X = np.vstack([rng.standard_normal((100, 3)),
                       rng.standard_normal((100, 3)) + 3.0])
        a = gmm_em(X, 2, FitConfig(seed=2))
        b = gmm_em(X, 2, FitConfig(seed=2))
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.model.sigma, b.model.sigma)
