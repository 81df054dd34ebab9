"""
Edge maps from a reconstructed image: the 2D statistic F evaluated in an
eps-scaled window slid across the image, its magnitude and angle, and
thresholded edge masks with quiver output.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy import signal

from sma.covariance import cov_matrix
from sma.errors import CoverageError, PreconditionError
from sma.inference import mahalanobis_sq
from sma.reconstructor import disk_cell_weights

logger = logging.getLogger(__name__)

POLICIES = ("quantile", "relative")


@dataclass(frozen=True)
class ScanConfig:
    """
    Window radius rho (eps-units), stride in image cells (default: rho/2 in
    eps-units) and the threshold policy used by ``extract_edges``.
    """

    rho: float = 3.0
    stride: int = 0
    policy: str = "quantile"
    q: float = 0.99
    fraction: float = 0.5

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise PreconditionError(f"unknown threshold policy {self.policy!r}; choose one of {', '.join(POLICIES)}")
        if self.stride < 0:
            raise PreconditionError("stride must be at least 1 cell")
        if not 0 < self.q < 1 or not 0 < self.fraction <= 1:
            raise PreconditionError("threshold parameters out of range")

    def stride_cells(self, image):
        if self.stride:
            return int(self.stride)
        return max(1, int(round(0.5 * self.rho * image.epsilon / image.step)))


@dataclass(frozen=True)
class EdgeMap:
    """Per-center F vectors; ``theta`` in [0, pi) with ``sign`` = +-1, NaN where |F| = 0"""

    centers: np.ndarray
    shape: tuple
    f: np.ndarray
    mag: np.ndarray
    theta: np.ndarray
    sign: np.ndarray
    nu: np.ndarray
    p_value: np.ndarray
    mask: np.ndarray
    quiver: tuple = ()

    def quiver_frame(self):
        return pd.DataFrame(list(self.quiver), columns=["x", "y", "ux", "uy", "mag", "p_value"])

    def to_frame(self):
        return pd.DataFrame(
            {
                "x": self.centers[:, 0],
                "y": self.centers[:, 1],
                "f1": self.f[:, 0],
                "f2": self.f[:, 1],
                "mag": self.mag,
                "theta": self.theta,
                "sign": self.sign,
                "p_value": self.p_value,
                "mask": self.mask,
            }
        )


def window_kernels(rho, h):
    """Correlation kernels (y1 w, y2 w) over the window lattice of step h"""
    n = int(round(rho / h))
    if n < 1 or abs(n * h - rho) > 1e-9 * rho:
        raise PreconditionError(f"window radius {rho} is not a multiple of the image step {h} (eps-units)")
    coords = np.arange(-n, n + 1) * h
    weights = disk_cell_weights(coords, rho)
    return weights * coords[:, None], weights * coords[None, :]


def _angles(f):
    mag = np.hypot(f[:, 0], f[:, 1])
    angle = np.arctan2(f[:, 1], f[:, 0])
    sign = np.where(angle < 0, -1, 1)
    theta = np.where(angle < 0, angle + np.pi, angle)
    flip = theta >= np.pi
    theta = np.where(flip, theta - np.pi, theta)
    sign = np.where(flip, -sign, sign)
    theta = np.where(mag > 0, theta, np.nan)
    return mag, theta, sign


def _center_covariance(ctx, rho, centers):
    """Per-center C_hat; one shared matrix when sigma is constant"""
    if ctx is None:
        return None
    if ctx.sigma.is_constant:
        return [cov_matrix(ctx, rho)] * len(centers)
    cache = {}
    out = []
    for center in centers:
        key = (round(float(center[0]), 12), round(float(center[1]), 12))
        if key not in cache:
            cache[key] = cov_matrix(replace(ctx, x0=key), rho)
        out.append(cache[key])
    logger.debug("evaluated %d position-dependent covariances", len(cache))
    return out


def scan(image, config=None, ctx=None, centers=None):
    """
    F at every window center of the image.

    Centers are the stride lattice of all fully covered windows, or the image
    pixels nearest to ``centers`` when given. ``ctx`` supplies the null
    covariance for p-values and quantile thresholds.
    """
    config = config or ScanConfig()
    if image.step > image.epsilon / 4.0 + 1e-15:
        raise PreconditionError("image step must be at most eps/4")
    h = image.step / image.epsilon
    k1, k2 = window_kernels(config.rho, h)
    n = (k1.shape[0] - 1) // 2
    rows, cols = image.values.shape
    if rows < 2 * n + 1 or cols < 2 * n + 1:
        raise CoverageError("scan window does not fit inside the image")

    if centers is None:
        stride = config.stride_cells(image)
        i_index = np.arange(n, rows - n, stride)
        j_index = np.arange(n, cols - n, stride)
        f1 = signal.correlate(image.values, k1, mode="valid", method="direct")[::stride, ::stride]
        f2 = signal.correlate(image.values, k2, mode="valid", method="direct")[::stride, ::stride]
        ii, jj = np.meshgrid(i_index, j_index, indexing="ij")
        shape = ii.shape
        f = np.stack([f1.ravel(), f2.ravel()], axis=1)
    else:
        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        ii = np.rint((centers[:, 0] - image.xs[0]) / image.step).astype(int)
        jj = np.rint((centers[:, 1] - image.ys[0]) / image.step).astype(int)
        if np.any((ii < n) | (ii >= rows - n) | (jj < n) | (jj >= cols - n)):
            raise CoverageError("a scan window exits the image")
        shape = (len(centers),)
        f = np.array(
            [
                [
                    np.sum(k1 * image.values[i - n : i + n + 1, j - n : j + n + 1]),
                    np.sum(k2 * image.values[i - n : i + n + 1, j - n : j + n + 1]),
                ]
                for i, j in zip(ii, jj)
            ]
        ).reshape(-1, 2)

    points = np.stack([image.xs[ii.ravel()], image.ys[jj.ravel()]], axis=1)
    mag, theta, sign = _angles(f)

    covariances = _center_covariance(ctx, config.rho, points)
    if covariances is None:
        nu = np.full(len(points), np.nan)
        p_value = np.full(len(points), np.nan)
    else:
        nu = np.sqrt([c.nu_sq for c in covariances])
        z = np.array([mahalanobis_sq(v, c) for v, c in zip(f, covariances)])
        p_value = np.exp(-0.5 * z)

    logger.info("scanned %d windows (rho=%.2f, h=%.4f)", len(points), config.rho, h)
    return EdgeMap(
        centers=points,
        shape=shape,
        f=f,
        mag=mag,
        theta=theta,
        sign=sign,
        nu=nu,
        p_value=p_value,
        mask=np.zeros(len(points), dtype=bool),
    )


def extract_edges(edge_map, config=None):
    """
    Threshold |F| per center.

    ``quantile``: tau = sqrt(-2 nu^2 ln(1 - q)), the null Rayleigh quantile.
    ``relative``: tau = fraction * max |F|.
    """
    config = config or ScanConfig()
    if config.policy == "quantile":
        if np.any(np.isnan(edge_map.nu)):
            raise PreconditionError("quantile thresholds need the null covariance (scan with a CovContext)")
        tau = np.sqrt(-2.0 * edge_map.nu**2 * np.log1p(-config.q))
    else:
        tau = config.fraction * float(np.max(edge_map.mag, initial=0.0))
    mask = edge_map.mag > tau
    quiver = tuple(
        (
            float(c[0]),
            float(c[1]),
            float(v[0] / m),
            float(v[1] / m),
            float(m),
            float(p),
        )
        for c, v, m, p in zip(edge_map.centers[mask], edge_map.f[mask], edge_map.mag[mask], edge_map.p_value[mask])
    )
    logger.info("edge mask: %d of %d centers", int(mask.sum()), len(mask))
    return replace(edge_map, mask=mask, quiver=quiver)


def distance_to_circle(points, center, radius):
    points = np.asarray(points, dtype=float)
    return np.abs(np.hypot(points[:, 0] - center[0], points[:, 1] - center[1]) - radius)
