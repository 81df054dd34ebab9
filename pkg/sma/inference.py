"""
Likelihood ratio tests for edges, their power, confidence regions and the
direction/magnitude uncertainty of the 2D statistic.

1D: F_u ~ N(H_u, gamma^2), Z = (F_u/gamma)^2 ~ chi2_1 under H0.
    With a known jump sign the directional variant rejects on s*F_u/gamma > z_{1-alpha}.
2D: F ~ N(H, C), Z = F^T C^-1 F ~ chi2_2 under H0, noncentral chi2_2(mu) otherwise.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.stats import chi2, ncx2, norm, rice

from sma.covariance import CovMatrix2
from sma.errors import PreconditionError, SingularCovarianceError

logger = logging.getLogger(__name__)

SINGULAR_RATIO = 1e-12
DET_FLOOR = 1e-300
ALTERNATIVES = ("two-sided", "directional")


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test: reject iff statistic > threshold"""

    __test__ = False

    statistic: float
    threshold: float
    reject: bool
    p_value: float
    alpha: float

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "threshold": self.threshold,
            "reject": self.reject,
            "p_value": self.p_value,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class Ellipse:
    """Confidence region {H : (F - H)^T C^-1 (F - H) <= radius_sq}"""

    center: tuple
    shape: CovMatrix2
    radius_sq: float

    def contains(self, h):
        """Membership of one point (2,) or many (n, 2)"""
        offset = np.asarray(h, dtype=float) - np.asarray(self.center)
        inside = mahalanobis_sq(offset, self.shape) <= self.radius_sq
        return bool(inside) if np.ndim(inside) == 0 else inside

    def axes(self):
        """Semi-axis lengths and unit directions (columns)"""
        values, vectors = np.linalg.eigh(self.shape.array)
        return np.sqrt(np.clip(values, 0.0, None) * self.radius_sq), vectors


def _check_alpha(alpha):
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha <= 0) | (alpha >= 1)):
        raise PreconditionError("test size alpha must lie in (0, 1)")


def _check_positive(value, name):
    if not value > 0:
        raise PreconditionError(f"{name} must be positive, got {value}")


def check_alternative(alternative):
    if alternative not in ALTERNATIVES:
        raise PreconditionError(f"unknown alternative {alternative!r}; choose one of {', '.join(ALTERNATIVES)}")
    return alternative


def inverse_2x2(cov):
    """Adjugate inverse; raises SingularCovarianceError unless C is positive definite"""
    smallest = float(cov.eigenvalues[0])
    det = cov.det
    if smallest <= SINGULAR_RATIO * cov.trace or det <= DET_FLOOR:
        raise SingularCovarianceError(
            f"covariance is not positive definite (min eigenvalue {smallest:.3e}, trace {cov.trace:.3e})"
        )
    return np.array([[cov.c22, -cov.c12], [-cov.c12, cov.c11]]) / det


def mahalanobis_sq(f, cov):
    """F^T C^-1 F for one vector (2,) or rows of (n, 2)"""
    inverse = inverse_2x2(cov)
    f = np.asarray(f, dtype=float)
    value = np.einsum("...i,ij,...j->...", f, inverse, f)
    return float(value) if value.ndim == 0 else value


def threshold_1d(alpha, alternative="two-sided"):
    if check_alternative(alternative) == "directional":
        return norm.ppf(1.0 - np.asarray(alpha, dtype=float))
    return chi2.ppf(1.0 - np.asarray(alpha, dtype=float), 1)


def threshold_2d(alpha):
    return -2.0 * np.log(alpha)


def statistic_1d(f_u, gamma, alternative="two-sided", sign=1.0):
    """(F_u/gamma)^2, or sign*F_u/gamma for the directional test"""
    _check_positive(gamma, "gamma")
    z = np.asarray(f_u, dtype=float) / gamma
    if check_alternative(alternative) == "directional":
        return np.sign(sign) * z
    return z**2


def test_1d(f_u, gamma, alpha, alternative="two-sided", sign=1.0):
    """
    LRT of size alpha for H0: H_u = 0.

    The directional test assumes sign(H_u) = sign(``sign``) under the alternative.
    """
    _check_alpha(alpha)
    z = float(statistic_1d(f_u, gamma, alternative, sign))
    threshold = float(threshold_1d(alpha, alternative))
    p_value = norm.sf(z) if alternative == "directional" else chi2.sf(z, 1)
    return TestResult(z, threshold, bool(z > threshold), float(p_value), float(alpha))


def beta_1d(h_u, gamma, alpha, alternative="two-sided"):
    """
    Type II error of the 1D test: P(|N(m, 1)| <= sqrt(c_alpha)), m = |H_u|/gamma.

    Directional: P(N(m, 1) <= z_{1-alpha}). Vectorized over ``alpha``.
    """
    _check_positive(gamma, "gamma")
    m = abs(float(h_u)) / gamma
    if check_alternative(alternative) == "directional":
        beta = norm.cdf(threshold_1d(alpha, alternative) - m)
    else:
        root = np.sqrt(threshold_1d(alpha))
        beta = norm.cdf(root - m) - norm.cdf(-root - m)
    return float(beta) if np.ndim(beta) == 0 else beta


def power_1d(h_u, gamma, alpha, alternative="two-sided"):
    return 1.0 - beta_1d(h_u, gamma, alpha, alternative)


def test_2d(f, cov, alpha):
    """LRT of size alpha for H0: H = 0 with known covariance"""
    _check_alpha(alpha)
    z = mahalanobis_sq(f, cov)
    threshold = float(threshold_2d(alpha))
    return TestResult(z, threshold, bool(z > threshold), float(np.exp(-0.5 * z)), float(alpha))


def noncentral_chi2_cdf(x, mu):
    """CDF of the noncentral chi2 with 2 degrees of freedom"""
    if np.any(np.asarray(x) < 0) or mu < 0:
        raise PreconditionError("noncentral chi2 needs x >= 0 and mu >= 0")
    if mu == 0:
        return -np.expm1(-0.5 * np.asarray(x, dtype=float))
    return ncx2.cdf(x, 2, mu)


def _noncentral_sf(x, mu):
    if mu == 0:
        return np.exp(-0.5 * np.asarray(x, dtype=float))
    return ncx2.sf(x, 2, mu)


def power_2d(h, cov, alpha):
    """1 - Y1(-2 ln alpha; mu) with mu = H^T C^-1 H; vectorized over ``alpha``"""
    mu = mahalanobis_sq(h, cov)
    value = _noncentral_sf(threshold_2d(np.asarray(alpha, dtype=float)), mu)
    return float(value) if np.ndim(value) == 0 else value


def power_2d_iso(h, nu, alpha):
    """Probability that N(H, nu^2 I) leaves the disk of radius nu sqrt(-2 ln alpha)"""
    _check_positive(nu, "nu")
    r = nu * np.sqrt(threshold_2d(np.asarray(alpha, dtype=float)))
    value = rice.sf(r / nu, np.hypot(*np.asarray(h, dtype=float)) / nu)
    return float(value) if np.ndim(value) == 0 else value


def confidence_region(f, cov, alpha):
    _check_alpha(alpha)
    inverse_2x2(cov)
    f = np.asarray(f, dtype=float)
    return Ellipse((float(f[0]), float(f[1])), cov, float(threshold_2d(alpha)))


def coverage_rate(samples, h, cov, alpha):
    """Fraction of F samples whose confidence region contains H"""
    offsets = np.asarray(samples, dtype=float) - np.asarray(h, dtype=float)
    return float(np.mean(mahalanobis_sq(offsets, cov) <= threshold_2d(alpha)))


def _polar(h):
    h = np.asarray(h, dtype=float)
    return float(np.hypot(h[0], h[1])), float(np.arctan2(h[1], h[0]))


def direction_pdf(theta, h, nu, method="closed"):
    """
    Density of the angle of F ~ N(H, nu^2 I).

    ``closed`` uses the projected-normal formula; ``quad`` integrates the
    bivariate density along the ray.
    """
    _check_positive(nu, "nu")
    magnitude, theta_h = _polar(h)
    m = magnitude / nu
    theta = np.asarray(theta, dtype=float)
    if method == "quad":
        values = np.vectorize(lambda angle: _direction_ray_integral(angle, h, nu))(theta)
        return float(values) if values.ndim == 0 else values
    delta = theta - theta_h
    b = m * np.cos(delta)
    values = (np.exp(-0.5 * m * m) + b * np.sqrt(2.0 * np.pi) * norm.cdf(b) * np.exp(-0.5 * (m * np.sin(delta)) ** 2)) / (
        2.0 * np.pi
    )
    if not np.all(np.isfinite(values)):
        logger.debug("direction pdf closed form not finite; falling back to quadrature")
        return direction_pdf(theta, h, nu, method="quad")
    return float(values) if values.ndim == 0 else values


def _direction_ray_integral(angle, h, nu):
    h = np.asarray(h, dtype=float)
    direction = np.array([np.cos(angle), np.sin(angle)])

    def integrand(t):
        offset = t * direction - h
        return t * np.exp(-0.5 * (offset @ offset) / nu**2) / (2.0 * np.pi * nu**2)

    reach = np.hypot(*h) + 40.0 * nu
    return integrate.quad(integrand, 0.0, reach, limit=200)[0]


def direction_coverage(omega, h, nu):
    """P(|angle(F) - angle(H)| <= omega)"""
    _check_positive(nu, "nu")
    if omega >= np.pi:
        return 1.0
    if omega <= 0:
        return 0.0
    _, theta_h = _polar(h)
    value, _ = integrate.quad(lambda t: direction_pdf(t, h, nu), theta_h - omega, theta_h + omega, limit=200)
    return float(min(value, 1.0))


def direction_halfwidth(level, h, nu):
    """Angle omega with direction_coverage(omega) = level"""
    _check_alpha(level)
    return float(optimize.brentq(lambda w: direction_coverage(w, h, nu) - level, 0.0, np.pi, xtol=1e-12))


def magnitude_pdf(t, h, nu):
    """Rice density of |F| for F ~ N(H, nu^2 I)"""
    _check_positive(nu, "nu")
    magnitude, _ = _polar(h)
    t = np.asarray(t, dtype=float)
    values = np.where(t >= 0, rice.pdf(np.clip(t, 0.0, None) / nu, magnitude / nu) / nu, 0.0)
    return float(values) if values.ndim == 0 else values


def magnitude_coverage(r, h, nu):
    """P(| |F| - |H| | <= r)"""
    _check_positive(nu, "nu")
    magnitude, _ = _polar(h)
    b = magnitude / nu
    upper = rice.cdf((magnitude + r) / nu, b)
    lower = rice.cdf(max(magnitude - r, 0.0) / nu, b)
    return float(upper - lower)


def magnitude_halfwidth(level, h, nu):
    """Radius r with magnitude_coverage(r) = level"""
    _check_alpha(level)
    magnitude, _ = _polar(h)
    reach = magnitude + 40.0 * nu
    return float(optimize.brentq(lambda r: magnitude_coverage(r, h, nu) - level, 0.0, reach, xtol=1e-12))


def auc_1d(m, alternative="two-sided"):
    """Area under the ROC of the 1D test for signal-to-noise m = |H_u|/gamma"""
    # X1 - X0 and X1 + X0 are independent N(m, 2)
    p = norm.cdf(abs(m) / np.sqrt(2.0))
    if check_alternative(alternative) == "directional":
        return float(p)
    return float(p * p + (1.0 - p) * (1.0 - p))


# library functions, not pytest cases
test_1d.__test__ = False
test_2d.__test__ = False
