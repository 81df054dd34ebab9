"""
Piecewise-polynomial interpolation kernels.

A kernel is stored as one power-basis polynomial per knot interval. Everything
the reconstruction and covariance code needs is derived once, at construction:

* phi and phi' (piecewise polynomials),
* the DTB profile f_T(t) = int_{-inf}^t phi - 1/2,
* the Hilbert transform of phi' in closed form (polynomial plus log terms,
  with an exact multipole series in the far field),
* the autocorrelations phi*phi and phi'*phi' as piecewise polynomials.

Hilbert transform convention: Hg(t) = (1/pi) p.v. int g(s) / (s - t) ds. This
is the negative of the common (1/pi) p.v. int g(s) / (t - s) ds form. With it
the reconstruction prefactor -d_alpha / (4 pi eps) reproduces f itself, and
t^2 * Hphi'(t) -> +1/pi (the other form gives -1/pi).
"""

import functools
import logging

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BSpline

from sma.errors import KernelError

logger = logging.getLogger(__name__)

KERNEL_NAMES = ("bspline4", "bspline3", "trapezoid")
DEFAULT_HILBERT_TRUNCATION = 64.0
MULTIPOLE_TERMS = 40


def _piecewise(t, breaks, polys):
    """Evaluate one polynomial per [breaks[i], breaks[i+1]); zero elsewhere"""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    index = np.searchsorted(breaks, t, side="right") - 1
    for i, poly in enumerate(polys):
        mask = index == i
        if np.any(mask):
            out[mask] = poly(t[mask])
    return out


def _chebyshev_nodes(a, b, count):
    k = np.arange(count)
    return a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * (k + 0.5) / count))


def _regular_part(poly, a, b):
    """R(t) = int_a^b (p(s) - p(t)) / (s - t) ds as a polynomial in t"""
    c = poly.coef
    out = np.zeros(max(len(c) - 1, 1))
    for n in range(1, len(c)):
        for m in range(n):
            out[n - 1 - m] += c[n] * (b ** (m + 1) - a ** (m + 1)) / (m + 1)
    return Polynomial(out)


def _autocorrelation(breaks, polys, degree):
    """
    Piecewise form of t -> int g(t + s) g(s) ds for an even piecewise polynomial g.

    The result is a polynomial of degree <= 2*degree + 1 between consecutive
    knot differences; each piece is recovered from exact Gauss-Legendre values
    at Chebyshev nodes. Only the half-line t >= 0 is stored.
    """
    radius = breaks[-1]
    lags = np.unique(np.round(np.subtract.outer(breaks, breaks).ravel(), 12))
    lags = lags[(lags >= 0) & (lags <= 2 * radius)]
    gl_nodes, gl_weights = leggauss(degree + 2)
    out_degree = 2 * degree + 1

    def exact(t):
        cuts = np.concatenate([breaks, breaks - t])
        cuts = np.unique(cuts[(cuts >= -radius) & (cuts <= radius - t)])
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo <= 0:
                continue
            s = 0.5 * (hi - lo) * gl_nodes + 0.5 * (hi + lo)
            values = _piecewise(s + t, breaks, polys) * _piecewise(s, breaks, polys)
            total += 0.5 * (hi - lo) * float(values @ gl_weights)
        return total

    pieces = []
    for lo, hi in zip(lags[:-1], lags[1:]):
        nodes = _chebyshev_nodes(lo, hi, out_degree + 3)
        values = np.array([exact(t) for t in nodes])
        pieces.append(Chebyshev.fit(nodes, values, out_degree, domain=[lo, hi]))
    return lags, pieces


class Kernel:
    """
    Even, compactly supported interpolation kernel phi.

    ``breaks`` are the knots, ``pieces`` the power-basis polynomials of phi
    between them (global variable t).
    """

    def __init__(self, name, breaks, pieces, smoothness_order, hilbert_truncation=DEFAULT_HILBERT_TRUNCATION):
        self.name = name
        self.breaks = np.asarray(breaks, dtype=float)
        self.pieces = [Polynomial(p.coef) for p in pieces]
        self.smoothness_order = int(smoothness_order)
        self.hilbert_truncation = float(hilbert_truncation)
        self.support_radius = float(self.breaks[-1])
        if len(self.pieces) != len(self.breaks) - 1:
            raise KernelError("need exactly one polynomial per knot interval")
        if not np.isclose(self.breaks[0], -self.breaks[-1]):
            raise KernelError("kernel support must be symmetric")

        self.dpieces = [p.deriv() for p in self.pieces]
        degree = max(p.degree() for p in self.pieces)
        self._build_dtb()
        self._build_hilbert()
        self._phi_corr_breaks, self._phi_corr = _autocorrelation(self.breaks, self.pieces, degree)
        self._dphi_corr_breaks, self._dphi_corr = _autocorrelation(
            self.breaks, self.dpieces, max(degree - 1, 0)
        )
        self._validate()
        logger.debug("built kernel %s: %d pieces, support %.3f", name, len(self.pieces), self.support_radius)

    def __repr__(self):
        return f"Kernel({self.name!r}, support_radius={self.support_radius}, T={self.hilbert_truncation})"

    # construction helpers

    def _build_dtb(self):
        cumulative = 0.0
        self._dtb_pieces = []
        for a, b, poly in zip(self.breaks[:-1], self.breaks[1:], self.pieces):
            antiderivative = poly.integ()
            self._dtb_pieces.append(antiderivative + (cumulative - antiderivative(a) - 0.5))
            cumulative += antiderivative(b) - antiderivative(a)
        self.integral = cumulative

    def _build_hilbert(self):
        # log|t - x_m| carries the jump of phi' across knot x_m
        padded = [Polynomial([0.0])] + self.dpieces + [Polynomial([0.0])]
        self._jumps = [padded[m + 1] - padded[m] for m in range(len(self.breaks))]
        regular = Polynomial([0.0])
        for a, b, poly in zip(self.breaks[:-1], self.breaks[1:], self.dpieces):
            regular = regular + _regular_part(poly, a, b)
        self._regular = regular

        nodes, weights = leggauss(MULTIPOLE_TERMS + 8)
        moments = np.zeros(MULTIPOLE_TERMS + 1)
        for a, b, poly in zip(self.breaks[:-1], self.breaks[1:], self.dpieces):
            s = 0.5 * (b - a) * nodes + 0.5 * (b + a)
            w = 0.5 * (b - a) * weights * poly(s)
            moments += np.array([w @ s**n for n in range(MULTIPOLE_TERMS + 1)])
        moments[0::2] = 0.0  # phi' is odd
        self._moments = moments
        self.far_field_radius = max(8.0, 3.0 * self.support_radius)

    def _validate(self):
        t = np.linspace(0.0, self.support_radius, 64)
        raw = _piecewise(t, self.breaks, self.pieces) - _piecewise(-t, self.breaks, self.pieces)
        if np.max(np.abs(raw)) > 1e-12:
            raise KernelError(f"kernel {self.name} is not even")
        if abs(self.integral - 1.0) > 1e-12:
            raise KernelError(f"kernel {self.name} integrates to {self.integral!r}, not 1")

        t = np.linspace(0.0, 1.0, 64, endpoint=False)
        shifts = np.arange(-int(np.ceil(self.support_radius)) - 1, int(np.ceil(self.support_radius)) + 2)
        values = self.phi(t[:, None] - shifts[None, :])
        if np.max(np.abs(values.sum(axis=1) - 1.0)) > 1e-10:
            raise KernelError(f"kernel {self.name} is not a partition of unity")
        if np.max(np.abs(values @ shifts - t)) > 1e-10:
            raise KernelError(f"kernel {self.name} does not reproduce linear functions")

    # evaluation

    def phi(self, t):
        return _piecewise(np.abs(t), self.breaks, self.pieces)

    def dphi(self, t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) * _piecewise(np.abs(t), self.breaks, self.dpieces)

    def dtb(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        profile = np.where(a >= self.support_radius, 0.5, _piecewise(a, self.breaks, self._dtb_pieces))
        return np.sign(t) * profile

    def hilbert_dphi(self, t, truncate=False):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        out = np.empty(a.shape)
        near = a <= self.far_field_radius

        if np.any(near):
            x = a[near]
            value = self._regular(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                for knot, jump in zip(self.breaks, self._jumps):
                    distance = np.abs(x - knot)
                    value = value - np.where(distance > 0, jump(x) * np.log(distance), 0.0)
            out[near] = value / np.pi

        if not np.all(near):
            inv = 1.0 / a[~near]
            # -(1/pi) * sum_n m_n / t^(n+1), Horner in 1/t
            series = np.zeros(inv.shape)
            for moment in self._moments[::-1]:
                series = series * inv + moment
            out[~near] = -series * inv / np.pi

        if truncate:
            out = np.where(a <= self.hilbert_truncation, out, 0.0)
        return out

    def autocorr_phi(self, t):
        return _piecewise(np.abs(t), self._phi_corr_breaks, self._phi_corr)

    def autocorr_dphi(self, t):
        return _piecewise(np.abs(t), self._dphi_corr_breaks, self._dphi_corr)

    def moments(self):
        """Integral, energy of phi' and second moment of phi"""
        return {
            "integral": self.integral,
            "dphi_energy": float(self.autocorr_dphi(0.0)),
            "second_moment": float(
                sum(
                    (Polynomial([0, 0, 1]) * p).integ()(b) - (Polynomial([0, 0, 1]) * p).integ()(a)
                    for a, b, p in zip(self.breaks[:-1], self.breaks[1:], self.pieces)
                )
            ),
        }


def _bspline_pieces(degree):
    knots = np.arange(degree + 2) - (degree + 1) / 2.0
    basis = BSpline.basis_element(knots, extrapolate=False)
    pieces = []
    for a, b in zip(knots[:-1], knots[1:]):
        nodes = _chebyshev_nodes(a, b, degree + 1)
        pieces.append(Polynomial.fit(nodes, basis(nodes), degree).convert())
    return knots, pieces


def _trapezoid_pieces():
    # box of width 1 convolved with a box of width 2 (height 1/2)
    knots = np.array([-1.5, -0.5, 0.5, 1.5])
    pieces = [Polynomial([0.75, 0.5]), Polynomial([0.5]), Polynomial([0.75, -0.5])]
    return knots, pieces


@functools.lru_cache(maxsize=None)
def make_kernel(name="bspline4", hilbert_truncation=DEFAULT_HILBERT_TRUNCATION):
    """Shared kernel instance for a config name"""
    if name == "bspline4":
        knots, pieces = _bspline_pieces(4)
        return Kernel(name, knots, pieces, smoothness_order=3, hilbert_truncation=hilbert_truncation)
    if name == "bspline3":
        knots, pieces = _bspline_pieces(3)
        return Kernel(name, knots, pieces, smoothness_order=2, hilbert_truncation=hilbert_truncation)
    if name == "trapezoid":
        knots, pieces = _trapezoid_pieces()
        return Kernel(name, knots, pieces, smoothness_order=0, hilbert_truncation=hilbert_truncation)
    raise KernelError(f"unknown kernel {name!r}; choose one of {', '.join(KERNEL_NAMES)}")


def eval_phi(kernel, t):
    return kernel.phi(t)


def eval_dphi(kernel, t):
    return kernel.dphi(t)


def eval_hilbert_dphi(kernel, t, truncate=False):
    return kernel.hilbert_dphi(t, truncate=truncate)


def dtb(kernel, t):
    return kernel.dtb(t)


def autocorr_dphi(kernel, t):
    return kernel.autocorr_dphi(t)
