"""
Discrete Radon data: the (alpha_k, p_j) lattice, exact sampling of a phantom,
noise injection and pixel binning.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from sma import phantom as phantom_ops
from sma.errors import DimensionError, NoiseModelError, PreconditionError, SupportError
from sma.rng import replicate_generator

logger = logging.getLogger(__name__)

_INDEX_SLACK = 1e-9


@dataclass(frozen=True)
class SamplingGrid:
    """
    Parallel-beam lattice alpha_k = alpha_origin + k*d_alpha, p_j = p_bar + j*epsilon.

    ``create`` fills the index ranges so that alpha covers [-pi, pi) once and
    |p_j| <= support. Binned grids carry explicit ranges.
    """

    epsilon: float
    kappa: float
    p_bar: float = 0.0
    support: float = 1.0
    alpha_origin: float = 0.0
    k_min: int = 0
    n_alpha: int = 0
    j_min: int = 0
    n_p: int = 0

    @classmethod
    def create(cls, epsilon=0.007, kappa=2 * np.pi, p_bar=0.0, support=1.0):
        if not epsilon > 0 or not kappa > 0 or not support > 0:
            raise PreconditionError("epsilon, kappa and P must be positive")
        d_alpha = kappa * epsilon
        k_min = -math.floor(np.pi / d_alpha + _INDEX_SLACK)
        k_max = math.ceil(np.pi / d_alpha - _INDEX_SLACK) - 1
        j_min = math.ceil((-support - p_bar) / epsilon - _INDEX_SLACK)
        j_max = math.floor((support - p_bar) / epsilon + _INDEX_SLACK)
        return cls(
            epsilon=float(epsilon),
            kappa=float(kappa),
            p_bar=float(p_bar),
            support=float(support),
            k_min=int(k_min),
            n_alpha=int(k_max - k_min + 1),
            j_min=int(j_min),
            n_p=int(j_max - j_min + 1),
        )

    @property
    def d_alpha(self):
        return self.kappa * self.epsilon

    @property
    def shape(self):
        return (self.n_alpha, self.n_p)

    @property
    def alphas(self):
        return self.alpha_origin + (self.k_min + np.arange(self.n_alpha)) * self.d_alpha

    @property
    def ps(self):
        return self.p_bar + (self.j_min + np.arange(self.n_p)) * self.epsilon

    def mesh(self):
        """(alpha, p) arrays of the sinogram's shape"""
        return np.meshgrid(self.alphas, self.ps, indexing="ij")

    def binned(self, n):
        """Grid of the n x n block means; incomplete edge blocks are dropped"""
        shift = (n - 1) / 2.0
        return SamplingGrid(
            epsilon=self.epsilon * n,
            kappa=self.kappa,
            p_bar=self.p_bar + (self.j_min + shift) * self.epsilon,
            support=self.support,
            alpha_origin=self.alpha_origin + (self.k_min + shift) * self.d_alpha,
            k_min=0,
            n_alpha=self.n_alpha // n,
            j_min=0,
            n_p=self.n_p // n,
        )


@dataclass(frozen=True)
class SigmaProfile:
    """
    Relative noise strength sigma(alpha, p).

    ``constant``: sigma = level. ``angular``: sigma = level*(1 + modulation*cos 2alpha),
    which keeps sigma(alpha, p) = sigma(alpha + pi, -p).
    """

    kind: str = "constant"
    level: float = 1.0
    modulation: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "angular"):
            raise NoiseModelError(f"unknown sigma profile {self.kind!r}")
        if self.level < 0 or abs(self.modulation) > 1:
            raise NoiseModelError("sigma must be nonnegative: need level >= 0 and |modulation| <= 1")

    @property
    def is_constant(self):
        return self.kind == "constant" or self.modulation == 0.0

    def scaled(self, factor):
        return replace(self, level=self.level * factor)

    def __call__(self, alpha, p):
        alpha = np.asarray(alpha, dtype=float)
        p = np.asarray(p, dtype=float)
        shape = np.broadcast(alpha, p).shape
        if self.kind == "constant":
            return np.full(shape, self.level)
        return np.broadcast_to(self.level * (1.0 + self.modulation * np.cos(2.0 * alpha)), shape).copy()


@dataclass(frozen=True)
class NoiseModel:
    """Independent zero-mean noise with variance sigma^2 * d_alpha * vartheta^2"""

    family: str = "uniform"
    sigma: SigmaProfile = field(default_factory=SigmaProfile)
    vartheta: float = 1.0
    raw_std: bool = False

    def __post_init__(self):
        if self.family not in ("uniform", "gaussian"):
            raise NoiseModelError(f"unknown noise family {self.family!r}")

    def std(self, grid):
        """Per-sample standard deviation on the grid"""
        alpha, p = grid.mesh()
        scale = self.vartheta if self.raw_std else self.vartheta * np.sqrt(grid.d_alpha)
        return self.sigma(alpha, p) * scale

    def scaled(self, factor):
        return replace(self, sigma=self.sigma.scaled(factor))


@dataclass(frozen=True)
class Sinogram:
    """Sampled data values[k][j] on ``grid``"""

    grid: SamplingGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise DimensionError(f"sinogram values {values.shape} do not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    def with_values(self, values):
        return Sinogram(self.grid, values)


def verify_parity(model, grid, tolerance=1e-12):
    """Raise NoiseModelError unless sigma(alpha, p) = sigma(alpha + pi, -p) on the grid"""
    alpha, p = grid.mesh()
    gap = np.max(np.abs(model.sigma(alpha, p) - model.sigma(alpha + np.pi, -p)), initial=0.0)
    if gap > tolerance:
        raise NoiseModelError(f"sigma parity violated by {gap:.3e}")
    return gap


def sample_radon(phantom, grid):
    """Exact Radon transform of the phantom on every lattice node"""
    for index, disk in enumerate(phantom.disks):
        if np.hypot(disk.cx, disk.cy) + disk.radius >= grid.support:
            raise SupportError(f"disk {index} is not inside |x| < P = {grid.support}")
    alpha, p = grid.mesh()
    return Sinogram(grid, phantom_ops.radon(phantom, alpha, p))


def draw_noise(grid, model, seed, replicate=0):
    """Noise array for replicate ``replicate``; a pure function of (seed, replicate)"""
    std = model.std(grid)
    rng = replicate_generator(seed, replicate)
    if model.family == "uniform":
        # U[-a, a] has variance a^2 / 3
        return rng.uniform(-1.0, 1.0, size=grid.shape) * (np.sqrt(3.0) * std)
    return rng.standard_normal(size=grid.shape) * std


def add_noise(sinogram, noise):
    noise = np.asarray(noise, dtype=float)
    if noise.shape != sinogram.values.shape:
        raise DimensionError(f"noise {noise.shape} does not match sinogram {sinogram.values.shape}")
    return sinogram.with_values(sinogram.values + noise)


def bin_sinogram(sinogram, n):
    """
    Pixel binning: mean of consecutive n x n blocks.

    The returned grid has steps n*epsilon and n*d_alpha (kappa unchanged) and
    sits at the block centers.
    """
    if int(n) != n or n <= 0:
        raise PreconditionError(f"binning factor must be a positive integer, got {n}")
    n = int(n)
    if n == 1:
        return sinogram
    grid = sinogram.grid.binned(n)
    rows, cols = grid.n_alpha * n, grid.n_p * n
    blocks = sinogram.values[:rows, :cols].reshape(grid.n_alpha, n, grid.n_p, n)
    logger.debug("binned %s -> %s with n=%d", sinogram.grid.shape, grid.shape, n)
    return Sinogram(grid, blocks.mean(axis=(1, 3)))


def nsr(clean, noise):
    """Ratio of the L2 norms of the noise and of the noiseless data"""
    signal = np.linalg.norm(np.asarray(clean.values if isinstance(clean, Sinogram) else clean))
    if signal == 0:
        raise PreconditionError("noise-to-signal ratio is undefined for an all-zero sinogram")
    return float(np.linalg.norm(noise) / signal)


def sigma_for_nsr(clean, model, target):
    """Constant sigma level giving the expected noise-to-signal ratio ``target``"""
    unit = replace(model, sigma=SigmaProfile("constant", 1.0))
    expected_noise = np.sqrt(np.sum(unit.std(clean.grid) ** 2))
    return float(target * np.linalg.norm(clean.values) / expected_noise)


def binning_factor(raw_std, sigma, grid):
    """
    Smallest n for which n x n binning of data with per-sample std ``raw_std``
    brings the noise down to sigma^2 * d_alpha' at the coarser step n*epsilon.
    """
    if sigma <= 0:
        raise PreconditionError("sigma must be positive")
    ratio = raw_std**2 / (sigma**2 * grid.d_alpha)
    return max(1, math.ceil(ratio ** (1.0 / 3.0) - 1e-12))


PARTS = ("full", "deterministic", "noise")


@dataclass(frozen=True)
class NoisyData:
    """Noiseless sinogram plus one noise draw; ``select`` picks a part of the data"""

    clean: Sinogram
    noise: np.ndarray

    def __post_init__(self):
        noise = np.asarray(self.noise, dtype=float)
        if noise.shape != self.clean.values.shape:
            raise DimensionError(f"noise {noise.shape} does not match sinogram {self.clean.values.shape}")
        object.__setattr__(self, "noise", noise)

    @property
    def grid(self):
        return self.clean.grid

    def select(self, part):
        if part == "full":
            return add_noise(self.clean, self.noise)
        if part == "deterministic":
            return self.clean
        if part == "noise":
            return self.clean.with_values(self.noise)
        raise PreconditionError(f"unknown data part {part!r}; choose one of {', '.join(PARTS)}")


def binned_model(model, n):
    """Noise model of n x n block means, expressed on the binned grid"""
    if n == 1:
        return model
    if model.raw_std:
        return model.scaled(1.0 / n)
    # block mean variance sigma^2 d_alpha / n^2 = sigma'^2 * (n d_alpha)
    return model.scaled(n**-1.5)
