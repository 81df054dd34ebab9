"""
Tests for the 1D and 2D likelihood ratio tests, their power and the
direction/magnitude uncertainty of the window statistic.
"""

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import ncx2, norm

from sma import inference
from sma.covariance import CovMatrix2
from sma.errors import PreconditionError, SingularCovarianceError

# |H|/nu at the default edge, sigma = sqrt(3)
DEFAULT_SNR = 1.23 / np.sqrt(0.074)


@pytest.fixture
def cov():
    return CovMatrix2(2.0, 0.4, 1.0)


class TestThresholds:
    def test_values(self):
        assert inference.threshold_1d(0.05) == pytest.approx(3.841458820694124, rel=1e-12)
        assert inference.threshold_2d(0.05) == pytest.approx(5.991464547107979, rel=1e-12)

    def test_invalid_alpha(self):
        with pytest.raises(PreconditionError):
            inference.test_1d(1.0, 1.0, 0.0)
        with pytest.raises(PreconditionError):
            inference.test_2d((1.0, 0.0), CovMatrix2.isotropic(1.0), 1.0)


class TestOneDimensional:
    def test_rejects_large_statistic(self):
        result = inference.test_1d(3.0, 1.0, 0.05)
        assert result.statistic == pytest.approx(9.0)
        assert result.reject
        assert result.p_value == pytest.approx(0.0026997960632601866, rel=1e-6)
        assert result.to_dict()["threshold"] == pytest.approx(3.841458820694124)

    def test_keeps_small_statistic(self):
        result = inference.test_1d(-1.5, 1.0, 0.05)
        assert result.statistic == pytest.approx(2.25)
        assert not result.reject

    def test_gamma_must_be_positive(self):
        with pytest.raises(PreconditionError, match="gamma"):
            inference.test_1d(1.0, 0.0, 0.05)

    def test_size_without_signal(self):
        assert inference.power_1d(0.0, 1.3, 0.05) == pytest.approx(0.05, rel=1e-10)

    def test_power_matches_simulation(self, rng):
        h_u, gamma = 2.5, 1.2
        draws = rng.normal(h_u, gamma, 200_000)
        empirical = np.mean((draws / gamma) ** 2 > inference.threshold_1d(0.05))
        assert inference.power_1d(h_u, gamma, 0.05) == pytest.approx(empirical, abs=0.005)

    def test_beta_vectorized_over_alpha(self):
        alphas = np.array([0.01, 0.05, 0.2])
        betas = inference.beta_1d(2.0, 1.0, alphas)
        assert betas.shape == (3,)
        assert np.all(np.diff(betas) < 0)
        assert betas[1] == pytest.approx(inference.beta_1d(2.0, 1.0, 0.05))


class TestTwoDimensional:
    def test_statistic(self, cov):
        f = np.array([1.0, -2.0])
        result = inference.test_2d(f, cov, 0.05)
        assert result.statistic == pytest.approx(f @ np.linalg.inv(cov.array) @ f)
        assert result.p_value == pytest.approx(np.exp(-0.5 * result.statistic))

    def test_mahalanobis_vectorized(self, cov, rng):
        rows = rng.normal(size=(5, 2))
        values = inference.mahalanobis_sq(rows, cov)
        np.testing.assert_allclose(values, [inference.mahalanobis_sq(row, cov) for row in rows])

    def test_singular_covariance(self):
        with pytest.raises(SingularCovarianceError):
            inference.inverse_2x2(CovMatrix2(1.0, 1.0, 1.0))
        with pytest.raises(SingularCovarianceError):
            inference.test_2d((1.0, 0.0), CovMatrix2(0.0, 0.0, 0.0), 0.05)

    def test_noncentral_cdf(self):
        x = np.array([0.5, 3.0, 8.0])
        np.testing.assert_allclose(inference.noncentral_chi2_cdf(x, 0.0), 1.0 - np.exp(-0.5 * x), rtol=1e-12)
        np.testing.assert_allclose(inference.noncentral_chi2_cdf(x, 2.5), ncx2.cdf(x, 2, 2.5))
        with pytest.raises(PreconditionError):
            inference.noncentral_chi2_cdf(-1.0, 1.0)

    def test_size_without_signal(self, cov):
        assert inference.power_2d((0.0, 0.0), cov, 0.05) == pytest.approx(0.05, rel=1e-12)

    def test_power_matches_simulation(self, cov, rng):
        h = np.array([2.0, 1.0])
        draws = rng.multivariate_normal(h, cov.array, 200_000)
        empirical = np.mean(inference.mahalanobis_sq(draws, cov) > inference.threshold_2d(0.05))
        assert inference.power_2d(h, cov, 0.05) == pytest.approx(empirical, abs=0.005)

    def test_isotropic_power_agrees(self):
        h, nu = (1.2, -0.7), 0.8
        alphas = np.array([0.01, 0.05, 0.3])
        np.testing.assert_allclose(
            inference.power_2d_iso(h, nu, alphas), inference.power_2d(h, CovMatrix2.isotropic(nu**2), alphas), rtol=1e-8
        )

    def test_confidence_region(self, cov, rng):
        h = np.array([1.0, 0.5])
        region = inference.confidence_region((1.3, 0.2), cov, 0.05)
        assert region.contains((1.3, 0.2))
        assert not region.contains((10.0, 10.0))
        lengths, _ = region.axes()
        assert np.all(lengths > 0)
        draws = rng.multivariate_normal(h, cov.array, 50_000)
        assert inference.coverage_rate(draws, h, cov, 0.05) == pytest.approx(0.95, abs=0.005)


class TestDirection:
    @pytest.mark.parametrize("theta", [-2.0, -0.3, 0.0, 0.4, 1.7, 3.0])
    def test_closed_form_matches_ray_integral(self, theta):
        h, nu = (1.0, 0.6), 0.7
        closed = inference.direction_pdf(theta, h, nu)
        assert closed == pytest.approx(inference.direction_pdf(theta, h, nu, method="quad"), rel=1e-6)

    def test_normalized(self):
        total, _ = integrate.quad(lambda t: inference.direction_pdf(t, (2.0, -1.0), 1.0), -np.pi, np.pi, limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_uniform_without_signal(self):
        theta = np.linspace(-3.0, 3.0, 7)
        np.testing.assert_allclose(inference.direction_pdf(theta, (0.0, 0.0), 1.0), 1.0 / (2 * np.pi))

    def test_halfwidth_inverts_coverage(self):
        h, nu = (1.5, 0.0), 0.5
        omega = inference.direction_halfwidth(0.9, h, nu)
        assert inference.direction_coverage(omega, h, nu) == pytest.approx(0.9, abs=1e-8)
        assert inference.direction_coverage(np.pi, h, nu) == 1.0

    def test_default_edge_halfwidth(self):
        omega = inference.direction_halfwidth(0.95, (DEFAULT_SNR, 0.0), 1.0)
        assert np.degrees(omega) == pytest.approx(26.0, abs=3.0)


class TestMagnitude:
    def test_normalized(self):
        h, nu = (1.0, 1.0), 0.5
        total, _ = integrate.quad(lambda t: inference.magnitude_pdf(t, h, nu), 0.0, 10.0, limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)
        assert inference.magnitude_pdf(-1.0, h, nu) == 0.0

    def test_default_edge_coverage(self):
        h = (DEFAULT_SNR, 0.0)
        assert inference.magnitude_coverage(0.43 * DEFAULT_SNR, h, 1.0) == pytest.approx(0.95, abs=0.03)

    def test_halfwidth_inverts_coverage(self):
        h, nu = (0.0, 2.0), 0.7
        r = inference.magnitude_halfwidth(0.8, h, nu)
        assert inference.magnitude_coverage(r, h, nu) == pytest.approx(0.8, abs=1e-8)


class TestAuc:
    def test_no_signal(self):
        assert inference.auc_1d(0.0) == pytest.approx(0.5)

    def test_increases_with_snr(self):
        values = [inference.auc_1d(m) for m in (0.5, 1.0, 2.0, 4.0)]
        assert np.all(np.diff(values) > 0)
        assert values[-1] > 0.99

    def test_matches_simulation(self, rng):
        m = 1.5
        null = rng.standard_normal(200_000) ** 2
        alt = rng.normal(m, 1.0, 200_000) ** 2
        assert inference.auc_1d(m) == pytest.approx(np.mean(alt > null), abs=5e-3)

    def test_directional_is_probability_of_correct_order(self, rng):
        m = 1.2
        null = rng.standard_normal(200_000)
        alt = rng.normal(m, 1.0, 200_000)
        auc = inference.auc_1d(m, "directional")
        assert auc == pytest.approx(norm.cdf(m / np.sqrt(2.0)), rel=1e-12)
        assert auc == pytest.approx(np.mean(alt > null), abs=5e-3)
        assert auc > inference.auc_1d(m)


class TestDirectionalTest:
    def test_threshold_is_one_sided_quantile(self):
        assert inference.threshold_1d(0.05, "directional") == pytest.approx(1.6448536269514722, rel=1e-12)

    def test_statistic_follows_expected_sign(self):
        assert inference.statistic_1d(-2.0, 1.0, "directional", sign=-1.0) == pytest.approx(2.0)
        assert inference.statistic_1d(-2.0, 1.0, "directional") == pytest.approx(-2.0)
        result = inference.test_1d(2.0, 1.0, 0.05, "directional")
        assert result.reject
        assert result.p_value == pytest.approx(norm.sf(2.0), rel=1e-12)
        assert not inference.test_1d(-2.0, 1.0, 0.05, "directional").reject

    def test_size_without_signal(self):
        assert inference.power_1d(0.0, 0.8, 0.05, "directional") == pytest.approx(0.05, rel=1e-10)

    def test_more_powerful_than_two_sided(self):
        alphas = np.array([0.01, 0.05, 0.2])
        directional = inference.power_1d(1.5, 1.0, alphas, "directional")
        np.testing.assert_allclose(directional, 1.0 - norm.cdf(norm.ppf(1.0 - alphas) - 1.5), rtol=1e-12)
        assert np.all(directional > inference.power_1d(1.5, 1.0, alphas))

    def test_unknown_alternative(self):
        with pytest.raises(PreconditionError, match="alternative"):
            inference.threshold_1d(0.05, "left")
        with pytest.raises(PreconditionError, match="alternative"):
            inference.auc_1d(1.0, "greater")
