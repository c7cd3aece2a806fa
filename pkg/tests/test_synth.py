import numpy as np
import pytest

from gendisc.synth import (
    Cubic,
    GaussianPrior,
    Seed,
    Tanh,
    TrueModel,
    exp_decay_prior,
    random_measurement_matrix,
    sample_pairs,
    sample_targets,
)


class TestSeed:
    def test_same_stream_reproduces(self):
        s = Seed(42).child(3, 7)
        a = s.generator().standard_normal(5)
        b = s.generator().standard_normal(5)
        assert np.array_equal(a, b)

    def test_children_are_distinct_streams(self):
        s = Seed(42)
        a = s.child(0).generator().standard_normal(5)
        b = s.child(1).generator().standard_normal(5)
        assert not np.array_equal(a, b)

    def test_master_range_checked(self):
        with pytest.raises(ValueError):
            Seed(-1)
        with pytest.raises(ValueError):
            Seed(2**64)
        Seed(2**64 - 1)  # max value is fine


class TestGaussianPrior:
    def test_rejects_non_pd_covariance(self):
        with pytest.raises(ValueError, match="positive definite"):
            GaussianPrior(mu_y=np.zeros(2), C_yy=np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_asymmetric_covariance(self):
        with pytest.raises(ValueError, match="symmetric"):
            GaussianPrior(mu_y=np.zeros(2), C_yy=np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            GaussianPrior(mu_y=np.zeros(3), C_yy=np.eye(2))


class TestSampleTargets:
    def test_empirical_mean_standard_normal(self):
        prior = GaussianPrior(mu_y=np.zeros(4), C_yy=np.eye(4))
        ys = sample_targets(prior, 100_000, Seed(11))
        assert np.max(np.abs(ys.mean(axis=0))) < 0.02

    def test_shift_equivariance(self):
        c = np.array([3.0, -1.5, 0.25])
        prior = GaussianPrior(mu_y=c, C_yy=np.eye(3))
        ys = sample_targets(prior, 100_000, Seed(12))
        assert np.max(np.abs(ys.mean(axis=0) - c)) < 0.02

    def test_exp_decay_prior_empirical_covariance(self):
        prior = exp_decay_prior(30)
        ys = sample_targets(prior, 100_000, Seed(13))
        emp = ys.T @ ys / ys.shape[0]
        assert emp[0, 1] == pytest.approx(np.exp(-1.0 / 5.0), abs=0.01)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_targets(exp_decay_prior(2), 0, Seed(0))


class TestExpDecayPrior:
    def test_unit_diagonal(self):
        prior = exp_decay_prior(30)
        assert np.array_equal(np.diag(prior.C_yy), np.ones(30))
        assert np.array_equal(prior.mu_y, np.zeros(30))

    def test_off_diagonal_formula(self):
        prior = exp_decay_prior(30)
        assert prior.C_yy[0, 5] == pytest.approx(np.exp(-1.0), rel=1e-15)
        assert prior.C_yy[0, 1] == pytest.approx(np.exp(-0.2), rel=1e-15)

    def test_cholesky_succeeds(self):
        np.linalg.cholesky(exp_decay_prior(30).C_yy)  # would raise if not PD


class TestSamplePairs:
    def test_noiseless_identity_channel(self):
        prior = exp_decay_prior(3)
        model = TrueModel(H=np.eye(3), mu_w=np.zeros(3), sigma2=0.0)
        data = sample_pairs(prior, model, 20, Seed(14))
        assert np.array_equal(data.xs, data.ys)

    def test_noiseless_affine_map(self):
        # sigma2 = 0 collapses the noise to mu_w, so every sample satisfies
        # x = 2 y + 1 exactly.
        prior = GaussianPrior(mu_y=np.array([3.0]), C_yy=np.eye(1))
        model = TrueModel(H=np.array([[2.0]]), mu_w=np.array([1.0]), sigma2=0.0)
        data = sample_pairs(prior, model, 50, Seed(15))
        assert np.allclose(data.xs, 2.0 * data.ys + 1.0, atol=1e-12)

    def test_determinism_bitwise(self):
        prior = exp_decay_prior(5)
        model = TrueModel(
            H=random_measurement_matrix(4, 5, Seed(1)), mu_w=np.zeros(4), sigma2=0.5
        )
        d1 = sample_pairs(prior, model, 100, Seed(16).child(2))
        d2 = sample_pairs(prior, model, 100, Seed(16).child(2))
        assert np.array_equal(d1.xs, d2.xs)
        assert np.array_equal(d1.ys, d2.ys)

    def test_dimension_mismatch_rejected(self):
        prior = exp_decay_prior(4)
        model = TrueModel(H=np.eye(3), mu_w=np.zeros(3), sigma2=1.0)
        with pytest.raises(ValueError, match="dimension"):
            sample_pairs(prior, model, 5, Seed(0))

    def test_shared_noise_across_sigma2(self):
        # Same seed, different sigma2: identical targets, noise merely rescaled.
        prior = exp_decay_prior(3)
        H = random_measurement_matrix(3, 3, Seed(2))
        d1 = sample_pairs(prior, TrueModel(H=H, mu_w=np.zeros(3), sigma2=1.0), 10, Seed(17))
        d2 = sample_pairs(prior, TrueModel(H=H, mu_w=np.zeros(3), sigma2=4.0), 10, Seed(17))
        assert np.array_equal(d1.ys, d2.ys)
        noise1 = d1.xs - d1.ys @ H.T
        noise2 = d2.xs - d2.ys @ H.T
        assert np.allclose(noise2, 2.0 * noise1, rtol=1e-12)

    def test_population_identities_of_linear_model(self):
        # Under x = H y + w: C_xy = H C_yy and C_xx = H C_yy H^T + sigma2 I,
        # checked against sample moments at n = 1e5 within 5% Frobenius.
        from gendisc.moments import compute_moments

        prior = exp_decay_prior(6)
        H = random_measurement_matrix(5, 6, Seed(3))
        sigma2 = 0.49
        model = TrueModel(H=H, mu_w=np.zeros(5), sigma2=sigma2)
        m = compute_moments(sample_pairs(prior, model, 100_000, Seed(18)))
        target_xy = H @ prior.C_yy
        assert np.linalg.norm(m.C_xy - target_xy) / np.linalg.norm(target_xy) <= 0.05
        target_xx = H @ prior.C_yy @ H.T + sigma2 * np.eye(5)
        assert np.linalg.norm(m.C_xx - target_xx) / np.linalg.norm(target_xx) <= 0.05

    def test_noise_independent_of_targets(self):
        prior = exp_decay_prior(6)
        H = random_measurement_matrix(5, 6, Seed(4))
        model = TrueModel(H=H, mu_w=np.zeros(5), sigma2=1.0)
        data = sample_pairs(prior, model, 100_000, Seed(19))
        w = data.xs - data.ys @ H.T
        wc = w - w.mean(axis=0)
        yc = data.ys - data.ys.mean(axis=0)
        cross = wc.T @ yc / data.n_t
        assert np.linalg.norm(cross) <= 0.05 * np.sqrt(5 * 6)


class TestNonlinearities:
    def test_tanh_approaches_linear(self):
        # Taylor oracle: |s tanh(u/s) - u| = u^3/(3 s^2) + O(u^5/s^4); at
        # s = 1e6 and |u| <= 10 the bound is 10^3/(3e12) ~ 3.34e-10.
        s = 1e6
        u = np.linspace(-10.0, 10.0, 2001)
        dev = np.abs(Tanh(scale=s).apply(u) - u)
        assert dev.max() <= 10.0**3 / (3.0 * s**2) * (1.0 + 1e-6)

    def test_cubic_reduces_to_linear_at_zero_alpha(self):
        u = np.linspace(-3.0, 3.0, 101)
        assert np.array_equal(Cubic(alpha=0.0).apply(u), u)

    def test_cubic_distortion_formula(self):
        u = np.array([0.5, -2.0])
        assert np.allclose(Cubic(alpha=0.1).apply(u), u + 0.1 * u**3)

    def test_nonlinear_branch_used_by_sample_pairs(self):
        prior = GaussianPrior(mu_y=np.zeros(2), C_yy=np.eye(2))
        H = np.array([[2.0, 0.0], [0.0, 2.0]])
        model = TrueModel(H=H, mu_w=np.zeros(2), sigma2=0.0, nonlinearity=Tanh(scale=1.0))
        data = sample_pairs(prior, model, 40, Seed(20))
        assert np.allclose(data.xs, np.tanh(2.0 * data.ys), atol=1e-12)

    def test_tanh_scale_positive(self):
        with pytest.raises(ValueError):
            Tanh(scale=0.0)


class TestRandomMeasurementMatrix:
    def test_determinism(self):
        a = random_measurement_matrix(4, 6, Seed(21))
        b = random_measurement_matrix(4, 6, Seed(21))
        assert np.array_equal(a, b)

    def test_distinct_trial_streams(self):
        a = random_measurement_matrix(4, 6, Seed(21).child(0))
        b = random_measurement_matrix(4, 6, Seed(21).child(1))
        assert not np.array_equal(a, b)

    def test_entry_moments(self):
        H = random_measurement_matrix(28, 30, Seed(22))
        assert abs(H.var() - 1.0) < 0.2
        assert abs(H.mean()) < 0.2
