"""
Filtered backprojection with the Hilbert-transformed kernel derivative.

f_rec(x) = -d_alpha / (4 pi eps) * sum_k sum_j Hphi'((alpha_k . x - p_j) / eps) * g[k][j]

The j-sum is restricted to |argument| <= T_hard. Points are evaluated one
view at a time over a fixed window of columns centered on each point, so a
point's value does not depend on which other points share the call.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from sma.errors import CoverageError, PreconditionError, SupportError
from sma.sampling import NoisyData, Sinogram

logger = logging.getLogger(__name__)

POINT_CHUNK = 4096
DISK_SUPERSAMPLE = 8
TABLE_OVERSAMPLE = 16
U_KINDS = ("sgn", "linear")


@dataclass(frozen=True)
class LocalPatch:
    """Reconstruction samples at x0 + eps * (coords[i], coords[j])"""

    x0: tuple
    epsilon: float
    rho: float
    h: float
    samples: np.ndarray
    part: str = "full"

    @property
    def coords(self):
        n = (self.samples.shape[0] - 1) // 2
        return np.arange(-n, n + 1) * self.h


@dataclass(frozen=True)
class ReconImage:
    """Image on a regular grid; values[i][j] sits at (xs[i], ys[j])"""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    epsilon: float

    @property
    def step(self):
        return float(self.xs[1] - self.xs[0]) if len(self.xs) > 1 else float("nan")

    def __add__(self, other):
        return ReconImage(self.xs, self.ys, self.values + other.values, self.epsilon)


@dataclass(frozen=True)
class InfluenceWeights:
    """
    Linear functional(s) on sinogram values.

    ``planes`` has shape (m, n_alpha, n_p): m = 2 for the window vector F,
    m = 1 for a segment integral F_u.
    """

    x0: tuple
    rho: float
    h: float
    planes: np.ndarray

    def apply(self, values):
        """Statistic for one sinogram (n_alpha, n_p) or a batch (b, n_alpha, n_p)"""
        values = np.asarray(values, dtype=float)
        flat = self.planes.reshape(self.planes.shape[0], -1)
        if values.ndim == 2:
            out = np.sum(flat * values.reshape(1, -1), axis=1)
        else:
            batch = values.reshape(values.shape[0], 1, -1)
            out = np.sum(flat[None, :, :] * batch, axis=2)
        return out[..., 0] if self.planes.shape[0] == 1 else out


def _prefactor(grid):
    return -grid.d_alpha / (4.0 * np.pi * grid.epsilon)


def _window_width(kernel):
    return int(np.ceil(kernel.hilbert_truncation)) + 1


def _check_points(points, support):
    radius = np.hypot(points[:, 0], points[:, 1])
    if np.any(radius >= support):
        worst = float(radius.max())
        raise SupportError(f"reconstruction point at |x| = {worst:.6f} is outside |x| < P = {support}")


def _filter_rows(values_row, s, grid, kernel, width):
    """sum_j Hphi'((s - p_j) / eps) * g[j] over the truncation window of each s"""
    eps = grid.epsilon
    p_first = grid.p_bar + grid.j_min * eps
    offsets = np.arange(-width, width + 1)
    padded = np.pad(values_row, (width, width))
    center = np.rint((s - p_first) / eps).astype(int)
    columns = center[:, None] + offsets[None, :]
    u = (s[:, None] - (p_first + columns * eps)) / eps
    data = padded[np.clip(columns + width, 0, padded.size - 1)]
    return np.sum(kernel.hilbert_dphi(u, truncate=True) * data, axis=1)


def _backproject(sinogram, kernel, points):
    grid = sinogram.grid
    width = _window_width(kernel)
    cos_a, sin_a = np.cos(grid.alphas), np.sin(grid.alphas)
    total = np.zeros(len(points))
    for k in range(grid.n_alpha):
        s = points[:, 0] * cos_a[k] + points[:, 1] * sin_a[k]
        total += _filter_rows(sinogram.values[k], s, grid, kernel, width)
    return _prefactor(grid) * total


def fbp_points(sinogram, kernel, points):
    """Reconstruction at an array of points (..., 2)"""
    points = np.asarray(points, dtype=float)
    shape = points.shape[:-1]
    flat = points.reshape(-1, 2)
    _check_points(flat, sinogram.grid.support)
    out = np.empty(len(flat))
    for start in range(0, len(flat), POINT_CHUNK):
        out[start : start + POINT_CHUNK] = _backproject(sinogram, kernel, flat[start : start + POINT_CHUNK])
    return out.reshape(shape)


def fbp_value(sinogram, kernel, x):
    return float(fbp_points(sinogram, kernel, np.asarray(x, dtype=float)[None, :])[0])


def _resolve(data, part):
    if isinstance(data, NoisyData):
        return data.select(part)
    if isinstance(data, Sinogram):
        return data
    raise PreconditionError("expected a Sinogram or NoisyData")


def patch_coords(rho, h):
    n = int(round(rho / h))
    if n < 1:
        raise PreconditionError(f"patch step h = {h} is larger than rho = {rho}")
    return np.arange(-n, n + 1) * h


def fbp_patch(data, kernel, x0, rho=3.0, h=0.125, part="full"):
    """
    Reconstruction on the eps-scaled lattice around x0.

    ``data`` is either a Sinogram (reconstructed as is, labeled with ``part``)
    or a NoisyData whose ``part`` is selected.
    """
    sinogram = _resolve(data, part)
    grid = sinogram.grid
    x0 = np.asarray(x0, dtype=float)
    if np.linalg.norm(x0) + grid.epsilon * (rho + 1.0) >= grid.support:
        raise SupportError("patch violates |x0| + eps*(rho + 1) < P")
    coords = patch_coords(rho, h)
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    points = np.stack([x0[0] + grid.epsilon * xx, x0[1] + grid.epsilon * yy], axis=-1)
    samples = fbp_points(sinogram, kernel, points)
    logger.debug("patch at %s: %d points, part=%s", x0, samples.size, part)
    return LocalPatch(
        x0=(float(x0[0]), float(x0[1])),
        epsilon=grid.epsilon,
        rho=float(rho),
        h=float(h),
        samples=samples,
        part=part,
    )


def dtb_residual(patch, theta0, delta_f, kernel, region="square", fit="mean"):
    """
    Fit c in patch ~ c + delta_f * f_T(theta0 . x) and return (c_fit, max_residual).

    ``region`` is the full square lattice or the disk |x| <= rho. ``fit`` is
    the least-squares constant ("mean") or the max-norm one ("midrange").
    """
    if patch.part != "deterministic":
        raise PreconditionError("dtb_residual needs a deterministic patch")
    theta0 = np.asarray(theta0, dtype=float)
    coords = patch.coords
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    residual = patch.samples - delta_f * kernel.dtb(theta0[0] * xx + theta0[1] * yy)
    if region == "disk":
        residual = residual[xx**2 + yy**2 <= patch.rho**2]
    if fit == "mean":
        c_fit = float(np.mean(residual))
    elif fit == "midrange":
        c_fit = 0.5 * float(np.max(residual) + np.min(residual))
    else:
        raise PreconditionError(f"unknown DTB fit {fit!r}; choose mean or midrange")
    return c_fit, float(np.max(np.abs(residual - c_fit)))


def disk_cell_weights(coords, rho, supersample=DISK_SUPERSAMPLE):
    """
    Quadrature weights of the lattice cells for the disk |y| <= rho.

    Each cell gets h^2 times the fraction of it covered by the disk,
    estimated on a supersample x supersample subgrid.
    """
    h = float(coords[1] - coords[0])
    sub = ((np.arange(supersample) + 0.5) / supersample - 0.5) * h
    x = coords[:, None, None, None] + sub[None, None, :, None]
    y = coords[None, :, None, None] + sub[None, None, None, :]
    covered = (x**2 + y**2 <= rho**2).mean(axis=(2, 3))
    return covered * h * h


def weight_function(u_kind, scale=1.0):
    """Odd weight u on [-rho, rho]: sgn or linear, times ``scale``"""
    if u_kind == "sgn":
        return lambda t: scale * np.sign(t)
    if u_kind == "linear":
        return lambda t: scale * np.asarray(t, dtype=float)
    raise PreconditionError(f"unknown weight {u_kind!r}; choose one of {', '.join(U_KINDS)}")


def segment_nodes(rho, h):
    """Midpoint nodes and weights of [-rho, rho] with step h"""
    n = int(round(rho / h))
    nodes = (np.arange(2 * n) + 0.5) * h - rho
    return nodes, np.full(nodes.shape, rho / n)


def f_u_1d(patch, theta0, u_kind="linear", rho=None, scale=1.0):
    """F_u = int u(t) patch(t * theta0) dt, patch values by bilinear interpolation"""
    rho = patch.rho if rho is None else rho
    if rho > patch.rho + 1e-12:
        raise CoverageError(f"segment of half-length {rho} exits the patch of radius {patch.rho}")
    theta0 = np.asarray(theta0, dtype=float)
    nodes, weights = segment_nodes(rho, patch.h)
    interpolator = RegularGridInterpolator((patch.coords, patch.coords), patch.samples, method="linear")
    values = interpolator(np.stack([nodes * theta0[0], nodes * theta0[1]], axis=-1))
    return float(np.sum(weights * weight_function(u_kind, scale)(nodes) * values))


def f_2d(patch, rho=None):
    """F = int_{|y| <= rho} y * patch(y) dy"""
    rho = patch.rho if rho is None else rho
    if rho > patch.rho + 1e-12:
        raise CoverageError(f"disk of radius {rho} is not covered by the patch of radius {patch.rho}")
    coords = patch.coords
    weights = disk_cell_weights(coords, rho) * patch.samples
    return np.array([np.sum(weights * coords[:, None]), np.sum(weights * coords[None, :])])


def fbp_image(sinogram, kernel, bbox, step=None, method="direct"):
    """
    Reconstruction on the regular grid covering bbox = (xmin, xmax, ymin, ymax).

    ``direct`` evaluates every pixel on the point code path. ``tabulated``
    filters each view once on an s-grid of step eps/16 and backprojects by
    linear interpolation.
    """
    grid = sinogram.grid
    step = grid.epsilon / 8.0 if step is None else float(step)
    xmin, xmax, ymin, ymax = bbox
    xs = xmin + step * np.arange(int(np.floor((xmax - xmin) / step + 1e-9)) + 1)
    ys = ymin + step * np.arange(int(np.floor((ymax - ymin) / step + 1e-9)) + 1)
    corners = np.array([[x, y] for x in (xs[0], xs[-1]) for y in (ys[0], ys[-1])])
    _check_points(corners, grid.support)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")

    if method == "direct":
        values = fbp_points(sinogram, kernel, np.stack([xx, yy], axis=-1))
    elif method == "tabulated":
        values = _tabulated_backprojection(sinogram, kernel, xx, yy)
    else:
        raise PreconditionError(f"unknown image method {method!r}")
    logger.info("reconstructed %dx%d image (%s)", len(xs), len(ys), method)
    return ReconImage(xs, ys, values, grid.epsilon)


def _tabulated_backprojection(sinogram, kernel, xx, yy):
    grid = sinogram.grid
    width = _window_width(kernel)
    delta = grid.epsilon / TABLE_OVERSAMPLE
    radius = float(np.max(np.hypot(xx, yy))) + 2 * delta
    table_s = np.arange(-radius, radius + delta, delta)
    cos_a, sin_a = np.cos(grid.alphas), np.sin(grid.alphas)
    total = np.zeros(xx.shape)
    for k in range(grid.n_alpha):
        filtered = _filter_rows(sinogram.values[k], table_s, grid, kernel, width)
        total += np.interp(xx * cos_a[k] + yy * sin_a[k], table_s, filtered)
    return _prefactor(grid) * total


def influence_weights(grid, kernel, x0, rho=3.0, h=0.125):
    """
    Weight planes w[k][j] with F = sum w * g for any data g on ``grid``.

    Uses the same lattice and disk cell weights as ``fbp_patch`` + ``f_2d``.
    """
    coords = patch_coords(rho, h)
    cell_weights = disk_cell_weights(coords, rho)
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    inside = cell_weights > 0
    offsets = np.stack([xx[inside], yy[inside]])
    moments = offsets * cell_weights[inside][None, :]
    planes = _weight_planes(grid, kernel, x0, offsets, moments)
    return InfluenceWeights((float(x0[0]), float(x0[1])), float(rho), float(h), planes)


def segment_weights(grid, kernel, x0, theta0, rho=3.0, h=0.125, u_kind="linear", scale=1.0):
    """Weight plane for F_u sampled directly at the segment's midpoint nodes"""
    theta0 = np.asarray(theta0, dtype=float)
    nodes, node_weights = segment_nodes(rho, h)
    offsets = np.stack([nodes * theta0[0], nodes * theta0[1]])
    moments = (node_weights * weight_function(u_kind, scale)(nodes))[None, :]
    planes = _weight_planes(grid, kernel, x0, offsets, moments)
    return InfluenceWeights((float(x0[0]), float(x0[1])), float(rho), float(h), planes)


def segment_points(x0, theta0, rho, h, epsilon):
    nodes, _ = segment_nodes(rho, h)
    theta0 = np.asarray(theta0, dtype=float)
    return np.asarray(x0, dtype=float)[None, :] + epsilon * nodes[:, None] * theta0[None, :]


def _weight_planes(grid, kernel, x0, offsets, moments):
    x0 = np.asarray(x0, dtype=float)
    eps = grid.epsilon
    points = x0[:, None] + eps * offsets
    _check_points(points.T, grid.support)
    truncation = kernel.hilbert_truncation
    ps = grid.ps
    cos_a, sin_a = np.cos(grid.alphas), np.sin(grid.alphas)
    planes = np.zeros((moments.shape[0], grid.n_alpha, grid.n_p))
    for k in range(grid.n_alpha):
        s = points[0] * cos_a[k] + points[1] * sin_a[k]
        lo = np.searchsorted(ps, s.min() - truncation * eps - eps)
        hi = np.searchsorted(ps, s.max() + truncation * eps + eps)
        if hi <= lo:
            continue
        u = (s[:, None] - ps[None, lo:hi]) / eps
        planes[:, k, lo:hi] = moments @ kernel.hilbert_dphi(u, truncate=True)
    planes *= _prefactor(grid)
    logger.debug("weight planes for x0=%s: %d nodes, %d views", x0, offsets.shape[1], grid.n_alpha)
    return planes
