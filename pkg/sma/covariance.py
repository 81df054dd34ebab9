"""
Limiting Gaussian-random-field covariances of the reconstruction noise.

C(x)   = (kappa/4pi)^2 * int_0^2pi s2(a) * (phi' * phi')(a . x) da,  s2(a) = sigma^2(a, a . x0)
C1(t)  = C(t * theta0)
gamma2 = int int u(t1) u(t2) C1(t1 - t2) dt1 dt2
C_hat  = (kappa/4pi)^2 * int s2(a) a a^T da * Q,
         Q = int int t s w(t) w(s) (phi' * phi')(t - s) dt ds,  w(t) = 2 sqrt(rho^2 - t^2)
"""

import functools
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.linalg import LinAlgError, cholesky

from sma.errors import FactorizationError, NoiseModelError, NumericalError, PreconditionError
from sma.reconstructor import weight_function
from sma.rng import stream_generator
from sma.sampling import SigmaProfile

logger = logging.getLogger(__name__)

DEFAULT_N_ALPHA = 2048
MIN_N_ALPHA = 256
GAMMA_NODES = 64
Q_NODES = 128
EDGE_NODES = 256
TABLE_STEP = 0.02
JITTER = 1e-10
CHUNK = 256


@dataclass(frozen=True)
class CovContext:
    """Edge location, angular sampling ratio and noise strength feeding C"""

    x0: tuple
    kappa: float
    sigma: SigmaProfile
    kernel: object
    n_alpha: int = DEFAULT_N_ALPHA
    vartheta: float = 1.0

    def __post_init__(self):
        if self.n_alpha < MIN_N_ALPHA:
            raise PreconditionError(f"n_alpha = {self.n_alpha} is below the minimum of {MIN_N_ALPHA}")
        object.__setattr__(self, "x0", (float(self.x0[0]), float(self.x0[1])))
        alphas, _ = self.nodes()
        p = np.cos(alphas) * self.x0[0] + np.sin(alphas) * self.x0[1]
        gap = np.max(np.abs(self.sigma(alphas, p) - self.sigma(alphas + np.pi, -p)))
        if gap > 1e-12:
            raise NoiseModelError(f"sigma parity violated by {gap:.3e} along x0")

    @classmethod
    def from_model(cls, x0, grid, model, kernel, n_alpha=DEFAULT_N_ALPHA):
        """Context matching data drawn with ``model`` on ``grid``"""
        vartheta = model.vartheta
        if model.raw_std:
            # literal std = sigma: equivalent to sigma / sqrt(d_alpha) on the scaled path
            vartheta = vartheta / np.sqrt(grid.d_alpha)
        return cls(x0, grid.kappa, model.sigma, kernel, n_alpha, vartheta)

    def nodes(self):
        alphas = 2.0 * np.pi * np.arange(self.n_alpha) / self.n_alpha
        return alphas, np.full(self.n_alpha, 2.0 * np.pi / self.n_alpha)

    def weighted_sigma_sq(self):
        """(alpha nodes, trapezoid weight * (kappa/4pi)^2 * vartheta^2 * sigma^2(alpha, alpha . x0))"""
        alphas, weights = self.nodes()
        p = np.cos(alphas) * self.x0[0] + np.sin(alphas) * self.x0[1]
        prefactor = (self.kappa / (4.0 * np.pi)) ** 2 * self.vartheta**2
        return alphas, prefactor * weights * self.sigma(alphas, p) ** 2

    def with_n_alpha(self, n_alpha):
        return CovContext(self.x0, self.kappa, self.sigma, self.kernel, n_alpha, self.vartheta)


@dataclass(frozen=True)
class CovMatrix2:
    c11: float
    c12: float
    c22: float

    def __post_init__(self):
        eigenvalues = self.eigenvalues
        if eigenvalues[0] < -1e-12 * max(self.trace, 0.0):
            raise NumericalError(f"covariance matrix has negative eigenvalue {eigenvalues[0]:.3e}")

    @classmethod
    def from_array(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        return cls(float(matrix[0, 0]), float(0.5 * (matrix[0, 1] + matrix[1, 0])), float(matrix[1, 1]))

    @classmethod
    def isotropic(cls, nu_sq):
        return cls(float(nu_sq), 0.0, float(nu_sq))

    @property
    def array(self):
        return np.array([[self.c11, self.c12], [self.c12, self.c22]])

    @property
    def trace(self):
        return self.c11 + self.c22

    @property
    def det(self):
        return self.c11 * self.c22 - self.c12 * self.c12

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.array)

    @property
    def nu_sq(self):
        return self.c11

    def scaled(self, factor):
        return CovMatrix2(self.c11 * factor, self.c12 * factor, self.c22 * factor)

    def to_dict(self):
        return {"c11": self.c11, "c12": self.c12, "c22": self.c22}


@dataclass(frozen=True)
class EdgeVector:
    """Deterministic part H of the 2D statistic, normal to the edge"""

    h: tuple
    magnitude_coeff: float

    @property
    def array(self):
        return np.asarray(self.h, dtype=float)

    @property
    def norm(self):
        return float(np.hypot(*self.h))


def cov_C(ctx, xcheck):
    """C at one rescaled offset or an array of offsets (..., 2)"""
    xcheck = np.asarray(xcheck, dtype=float)
    flat = xcheck.reshape(-1, 2)
    alphas, weights = ctx.weighted_sigma_sq()
    cos_a, sin_a = np.cos(alphas), np.sin(alphas)
    out = np.empty(len(flat))
    for start in range(0, len(flat), CHUNK):
        block = flat[start : start + CHUNK]
        projections = block[:, 0:1] * cos_a[None, :] + block[:, 1:2] * sin_a[None, :]
        out[start : start + CHUNK] = ctx.kernel.autocorr_dphi(projections) @ weights
    out = out.reshape(xcheck.shape[:-1])
    return float(out) if out.ndim == 0 else out


def cov_C1(ctx, t, theta0):
    """C restricted to the line through x0 along theta0 (angle or unit vector)"""
    direction = _direction(theta0)
    t = np.asarray(t, dtype=float)
    return cov_C(ctx, t[..., None] * direction)


def _direction(theta0):
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.ndim == 0:
        return np.array([np.cos(theta0), np.sin(theta0)])
    return theta0 / np.linalg.norm(theta0)


def _c1_spline(ctx, theta0, reach):
    count = max(1025, int(np.ceil(reach / TABLE_STEP)) + 1)
    taus = np.linspace(0.0, reach, count)
    values = cov_C1(ctx, taus, theta0)
    logger.debug("tabulated C1 on %d nodes up to %.2f", count, reach)
    return CubicSpline(taus, values)


def _split_gauss(rho, count):
    """Gauss-Legendre nodes and weights on [-rho, 0] and [0, rho]"""
    nodes, weights = leggauss(count)
    half_nodes = 0.5 * rho * (nodes + 1.0)
    half_weights = 0.5 * rho * weights
    return np.concatenate([-half_nodes[::-1], half_nodes]), np.concatenate([half_weights[::-1], half_weights])


def gamma_sq(ctx, u, rho, theta0=0.0, scale=1.0):
    """
    Variance of the segment statistic int u(t) N(x0 + eps t theta0) dt.

    ``u`` is a weight kind ("sgn", "linear") or a callable on [-rho, rho].
    """
    if not rho > 0:
        raise PreconditionError("rho must be positive")
    weight = weight_function(u, scale) if isinstance(u, str) else u
    count = max(GAMMA_NODES, int(np.ceil(4.0 * rho)))
    nodes, weights = _split_gauss(rho, count)
    wu = weights * np.asarray(weight(nodes), dtype=float)
    if not np.any(wu):
        return 0.0
    spline = _c1_spline(ctx, theta0, 2.0 * rho)
    kernel_matrix = spline(np.abs(nodes[:, None] - nodes[None, :]))
    return float(wu @ kernel_matrix @ wu)


@functools.lru_cache(maxsize=64)
def _disk_moment(kernel, rho):
    """Q for a window of radius rho; t = rho sin(theta) absorbs the chord weight"""
    nodes, weights = leggauss(Q_NODES)
    theta = 0.5 * np.pi * nodes
    t = rho * np.sin(theta)
    w = 0.5 * np.pi * weights * 2.0 * rho**3 * np.sin(theta) * np.cos(theta) ** 2
    value = float(w @ kernel.autocorr_dphi(t[:, None] - t[None, :]) @ w)
    logger.debug("disk moment Q(rho=%.3f) = %.6e for %s", rho, value, kernel.name)
    return value


def cov_matrix(ctx, rho):
    """Covariance of the noise part of F = int_{|y| <= rho} y N(x0 + eps y) dy"""
    if not rho > 0:
        raise PreconditionError("rho must be positive")
    alphas, weights = ctx.weighted_sigma_sq()
    cos_a, sin_a = np.cos(alphas), np.sin(alphas)
    angular = np.array(
        [
            [weights @ (cos_a * cos_a), weights @ (cos_a * sin_a)],
            [weights @ (cos_a * sin_a), weights @ (sin_a * sin_a)],
        ]
    )
    return CovMatrix2.from_array(angular * _disk_moment(ctx.kernel, float(rho)))


def brute_force_cov_matrix(ctx, rho, n_pairs=10_000_000, seed=0, chunk=1_000_000):
    """
    Monte Carlo estimate of int int y z^T C(y - z) dy dz over the window disk.

    Samples (alpha, y, z) uniformly; independent of the rotation reduction
    used by ``cov_matrix``.
    """
    rng = stream_generator(seed, 0)
    _, weights = ctx.weighted_sigma_sq()
    total = np.zeros((2, 2))
    done = 0
    while done < n_pairs:
        size = min(chunk, n_pairs - done)
        alpha = rng.uniform(0.0, 2.0 * np.pi, size)
        y = _uniform_disk(rng, rho, size)
        z = _uniform_disk(rng, rho, size)
        p = np.cos(alpha) * ctx.x0[0] + np.sin(alpha) * ctx.x0[1]
        s2 = ctx.sigma(alpha, p) ** 2
        projection = np.cos(alpha) * (y[:, 0] - z[:, 0]) + np.sin(alpha) * (y[:, 1] - z[:, 1])
        values = s2 * ctx.kernel.autocorr_dphi(projection)
        total += np.einsum("n,ni,nj->ij", values, y, z)
        done += size
    area = np.pi * rho**2
    prefactor = (ctx.kappa / (4.0 * np.pi)) ** 2 * ctx.vartheta**2 * 2.0 * np.pi
    logger.info("brute-force covariance from %d point pairs", n_pairs)
    return CovMatrix2.from_array(prefactor * area**2 * total / n_pairs)


def _uniform_disk(rng, rho, size):
    radius = rho * np.sqrt(rng.uniform(0.0, 1.0, size))
    angle = rng.uniform(0.0, 2.0 * np.pi, size)
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)


@functools.lru_cache(maxsize=64)
def _edge_coefficient(kernel, rho):
    # split the theta-range where t = rho sin(theta) crosses a knot of f_T
    knots = kernel.breaks[(kernel.breaks > 0) & (kernel.breaks < rho)]
    cuts = np.concatenate([[0.0], np.arcsin(knots / rho), [0.5 * np.pi]])
    nodes, weights = leggauss(EDGE_NODES)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        theta = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * weights * rho**3 * np.sin(theta) * np.cos(theta) ** 2
        total += float(w @ kernel.dtb(rho * np.sin(theta)))
    return 4.0 * total


def edge_vector(kernel, rho, delta_f, theta0):
    """H = 4 int_0^rho t sqrt(rho^2 - t^2) f_T(t) dt * delta_f * theta0"""
    if not rho > 0:
        raise PreconditionError("rho must be positive")
    coeff = _edge_coefficient(kernel, float(rho))
    direction = _direction(theta0)
    h = coeff * delta_f * direction
    return EdgeVector(h=(float(h[0]), float(h[1])), magnitude_coeff=coeff)


def edge_scalar(kernel, rho, delta_f, u="linear", scale=1.0):
    """H_u = delta_f * int u(t) f_T(t) dt, the deterministic part of F_u"""
    weight = weight_function(u, scale) if isinstance(u, str) else u
    knots = kernel.breaks[(kernel.breaks > 0) & (kernel.breaks < rho)]
    cuts = np.concatenate([[0.0], knots, [rho]])
    nodes, weights = leggauss(EDGE_NODES)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        t = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * weights
        # u and f_T are odd: the integrand is even
        total += 2.0 * float(w @ (np.asarray(weight(t), dtype=float) * kernel.dtb(t)))
    return delta_f * total


def grf_sample(ctx, points, seed, size=None):
    """
    Draw(s) of the zero-mean field with covariance C(x_i - x_j) at ``points``.

    Returns shape (n,) for ``size=None``, else (size, n).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    offsets = points[:, None, :] - points[None, :, :]
    matrix = np.asarray(cov_C(ctx, offsets)).reshape(len(points), len(points))
    matrix = 0.5 * (matrix + matrix.T)
    jitter = JITTER * max(float(np.max(np.diag(matrix))), 1.0)
    try:
        lower = cholesky(matrix + jitter * np.eye(len(points)), lower=True)
    except LinAlgError as exc:
        raise FactorizationError(f"covariance over {len(points)} points is not positive semidefinite") from exc
    rng = stream_generator(seed, 1)
    draws = rng.standard_normal((1 if size is None else size, len(points)))
    values = draws @ lower.T
    return values[0] if size is None else values


def asymptotic_table(kernel, rhos, kappa=2 * np.pi, sigma=1.0, n_alpha=DEFAULT_N_ALPHA):
    """
    Large-window behavior: coeff/rho^3, H_u for u = sgn/rho and gamma^2 for u = sgn/rho
    with constant sigma; the slope of log gamma^2 against log rho is attached as
    ``gamma_sq_loglog_slope``.
    """
    ctx = CovContext((0.0, 0.0), kappa, SigmaProfile("constant", sigma), kernel, n_alpha)
    rows = []
    for rho in rhos:
        rho = float(rho)
        rows.append(
            {
                "rho": rho,
                "coeff_over_rho3": _edge_coefficient(kernel, rho) / rho**3,
                "h_u_sgn": edge_scalar(kernel, rho, 1.0, "sgn", 1.0 / rho),
                "gamma_sq_sgn": gamma_sq(ctx, "sgn", rho, 0.0, 1.0 / rho),
            }
        )
    table = pd.DataFrame(rows)
    if len(table) > 1:
        slope = np.polyfit(np.log(table["rho"]), np.log(table["gamma_sq_sgn"]), 1)[0]
        table.attrs["gamma_sq_loglog_slope"] = float(slope)
    return table
