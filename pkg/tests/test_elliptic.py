import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexem.elliptic import (
    NOISE,
    CovarianceSpec,
    Gaussian,
    GenGaussian,
    KDist,
    StudentT,
    argsup_density,
    builtin_setup,
    generate_setup,
    generator_from_dict,
    make_covariance,
    sample_elliptical,
    setup_from_dict,
)


def grid_argsup(gen, m, n_points=1_000_000):
    """Brute-force maximiser of t^{m/2} g(t): coarse log-grid, then a fine
    pass around the coarse peak."""
    coarse = np.exp(np.linspace(math.log(1e-6), math.log(1e6), n_points // 2))
    h = 0.5 * m * np.log(coarse) + gen.log_g(coarse, m)
    t0 = coarse[np.argmax(h)]
    fine = np.exp(np.linspace(math.log(t0) - 0.01, math.log(t0) + 0.01,
                              n_points // 2))
    h = 0.5 * m * np.log(fine) + gen.log_g(fine, m)
    return fine[np.argmax(h)]


class TestArgsup:
    def test_gaussian_closed_form(self):
        assert argsup_density(Gaussian(), 4) == 4.0

    def test_student_closed_form(self):
        assert argsup_density(StudentT(3.0), 8) == 8.0

    def test_gen_gaussian_matches_grid_oracle(self):
        gen = GenGaussian(0.5)
        a = argsup_density(gen, 6)
        oracle = grid_argsup(gen, 6)
        assert a == pytest.approx(oracle, rel=1e-6)

    def test_kdist_matches_grid_oracle(self):
        gen = KDist(3.0)
        a = argsup_density(gen, 10)
        assert a == pytest.approx(grid_argsup(gen, 10), rel=1e-6)

    @pytest.mark.parametrize("gen", [Gaussian(), StudentT(5.0)])
    @pytest.mark.parametrize("m", [2, 8, 40])
    def test_numerical_path_agrees_with_closed_forms(self, gen, m):
        from flexem.elliptic import _golden_argsup

        assert _golden_argsup(gen, m) == pytest.approx(float(m), rel=1e-8)

    def test_invalid_dimension(self):
        with pytest.raises(ValueError):
            argsup_density(Gaussian(), 0)

    def test_divergent_integrand_has_no_finite_maximizer(self):
        from flexem.elliptic import DensityGenerator

        class Flat(DensityGenerator):
            # t^{m/2} g(t) grows without bound; violates the integrability
            # precondition of the scale estimator
            name = "flat"

            def log_g(self, t, m):
                return np.zeros_like(np.asarray(t, dtype=float))

        with pytest.raises(ValueError, match="no finite maximizer"):
            argsup_density(Flat(), 4)


class TestMakeCovariance:
    def test_toeplitz_rho_zero_is_identity(self):
        sigma = make_covariance(CovarianceSpec.toeplitz(0.0, target_trace=3.0), 3)
        assert np.array_equal(sigma, np.eye(3))

    def test_toeplitz_unconstrained(self):
        sigma = make_covariance(CovarianceSpec.toeplitz(0.5), 3)
        expected = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
        assert np.allclose(sigma, expected, rtol=0, atol=0)

    def test_diagonal_trace(self):
        entries = [0.25, 3.5, 0.25, 0.75, 1.5, 0.5, 1, 0.25, 1, 1]
        sigma = make_covariance(CovarianceSpec.diagonal(entries, target_trace=10.0), 10)
        assert np.trace(sigma) == pytest.approx(10.0, rel=1e-12)
        assert np.allclose(np.diag(sigma), entries)

    def test_nonpositive_diagonal_entry(self):
        with pytest.raises(ValueError, match="non-positive"):
            make_covariance(CovarianceSpec.diagonal([1.0, 0.0], None), 2)

    def test_bad_rho(self):
        with pytest.raises(ValueError):
            make_covariance(CovarianceSpec.toeplitz(1.0), 3)

    @given(
        rho=st.floats(0.0, 0.95),
        m=st.integers(1, 16),
        trace=st.floats(0.5, 50.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_spd_and_trace_invariants(self, rho, m, trace):
        sigma = make_covariance(CovarianceSpec.toeplitz(rho, target_trace=trace), m)
        assert np.array_equal(sigma, sigma.T)
        assert np.linalg.eigvalsh(sigma).min() > 0
        assert abs(np.trace(sigma) - trace) <= 1e-12 * trace


class TestSampleElliptical:
    def test_gaussian_moments(self):
        rng = np.random.default_rng(7)
        m, n = 5, 100_000
        x = sample_elliptical(np.zeros(m), np.eye(m), 1.0, Gaussian(), rng, size=n)
        assert np.abs(x.mean(axis=0)).max() < 4.0 / math.sqrt(n)
        cov = np.cov(x.T, bias=True)
        assert np.linalg.norm(cov - np.eye(m), "fro") < 0.1

    def test_tau_scales_covariance_exactly(self):
        mu = np.array([1.0, -2.0, 0.5])
        sigma = make_covariance(CovarianceSpec.toeplitz(0.3), 3)
        x1 = sample_elliptical(mu, sigma, 1.0, Gaussian(),
                               np.random.default_rng(3), size=500)
        x4 = sample_elliptical(mu, sigma, 4.0, Gaussian(),
                               np.random.default_rng(3), size=500)
        assert np.allclose(x4 - mu, 2.0 * (x1 - mu), rtol=1e-12, atol=1e-12)

    def test_student_tails_heavier_than_gaussian(self):
        rng = np.random.default_rng(11)
        x = sample_elliptical(np.zeros(3), np.eye(3), 1.0, StudentT(3.0),
                              rng, size=100_000)
        z = x[:, 0]
        kurtosis = np.mean(z**4) / np.mean(z**2) ** 2
        assert kurtosis > 3.0

    def test_not_spd_rejected(self):
        with pytest.raises(ValueError, match="SPD"):
            sample_elliptical(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]),
                              1.0, Gaussian(), np.random.default_rng(0))

    @pytest.mark.parametrize("gen", [Gaussian(), KDist(3.0), GenGaussian(0.5),
                                     GenGaussian(2.0)])
    @pytest.mark.parametrize("m", [2, 16, 64])
    def test_modular_variate_mean_is_m(self, gen, m):
        rng = np.random.default_rng(42)
        q = gen.sample_q(m, 100_000, rng)
        stderr = q.std(ddof=1) / math.sqrt(q.size)
        assert abs(q.mean() - m) < 3.0 * stderr

    @pytest.mark.parametrize("dof", [10.0, 30.0])
    @pytest.mark.parametrize("m", [2, 16, 64])
    def test_student_modular_variate_scale_convention(self, dof, m):
        # Q = m F(m, dof): the scale-matrix parameterisation, E[Q] = m dof/(dof-2)
        rng = np.random.default_rng(42)
        q = StudentT(dof).sample_q(m, 100_000, rng)
        stderr = q.std(ddof=1) / math.sqrt(q.size)
        assert abs(q.mean() - m * dof / (dof - 2.0)) < 3.0 * stderr


class TestGenerateSetup:
    def test_setup3_composition(self):
        spec = builtin_setup(3)
        assert (spec.m, spec.n) == (40, 1300)
        kinds = [c.generators[0][1].name for c in spec.clusters]
        assert kinds == ["k_dist", "student_t", "gaussian"]
        assert spec.clusters[0].generators[0][1].shape == 3.0
        assert spec.clusters[1].generators[0][1].dof == 6.0
        covs = [c.cov for c in spec.clusters]
        assert covs[0].rho == 0.2 and covs[2].rho == 0.5
        assert covs[1].kind == "identity"
        means = [c.mean.ones for c in spec.clusters]
        assert means == [2.0, 6.0, 7.0]
        sample = generate_setup(spec, np.random.default_rng(0))
        assert sample.data.shape == (1300, 40)
        assert set(np.unique(sample.labels)) == {0, 1, 2}

    def test_setup4_noise(self):
        sample = generate_setup(builtin_setup(4), np.random.default_rng(1))
        noise = sample.labels == NOISE
        assert noise.sum() == 120
        assert sample.data[noise].min() >= 0.0
        assert sample.data[noise].max() <= 14.0

    def test_single_gaussian_cluster_covariance(self):
        from flexem.elliptic import ClusterSpec, MeanSpec, SetupSpec

        spec = SetupSpec(
            m=4, n=20_000,
            clusters=(ClusterSpec(MeanSpec(), CovarianceSpec.identity(),
                                  ((1.0, Gaussian()),)),),
            proportions=(1.0,),
        )
        sample = generate_setup(spec, np.random.default_rng(5))
        cov = np.cov(sample.data.T, bias=True)
        assert np.linalg.norm(cov - np.eye(4), "fro") < 0.1

    def test_reproducible_given_seed(self):
        spec = builtin_setup(1)
        a = generate_setup(spec, np.random.default_rng(123))
        b = generate_setup(spec, np.random.default_rng(123))
        assert np.array_equal(a.data, b.data)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.truth.mu, b.truth.mu)

    def test_setup1_traces(self):
        sample = generate_setup(builtin_setup(1), np.random.default_rng(2))
        traces = [np.trace(s) for s in sample.truth.sigma]
        assert traces[0] == pytest.approx(8.0)
        assert traces[1] == pytest.approx(12.0)
        assert traces[2] == pytest.approx(4.0)

    def test_proportions_not_trivial(self):
        sample = generate_setup(builtin_setup(2), np.random.default_rng(9))
        assert sample.truth.pi.min() >= 0.15
        assert sample.truth.pi.sum() == pytest.approx(1.0)

    def test_setup5_mixed_generators(self):
        spec = builtin_setup(5)
        weights = [w for w, _ in spec.clusters[0].generators]
        assert weights == [0.7, 0.3]
        assert spec.clusters[1].generators[1][1].dof == 2.3

    def test_config_round_trip(self):
        for sid in range(1, 6):
            spec = builtin_setup(sid)
            rebuilt = setup_from_dict(spec.to_dict())
            assert rebuilt == spec

    def test_generator_round_trip(self):
        for gen in [Gaussian(), StudentT(2.3), KDist(3.0), GenGaussian(0.1)]:
            assert generator_from_dict(gen.to_dict()) == gen
