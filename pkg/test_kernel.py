"""
Tests for the interpolation kernels: normalization, DTB profile, closed-form
Hilbert transform and autocorrelations.
"""

import numpy as np
import pytest
from scipy import integrate

from sma.errors import KernelError
from sma.kernel import KERNEL_NAMES, eval_dphi, eval_hilbert_dphi, eval_phi, make_kernel


def _pv_hilbert(kernel, t):
    """(1/pi) p.v. int phi'(s) / (s - t) ds by adaptive Cauchy-weight quadrature"""
    r = kernel.support_radius
    points = list(kernel.breaks)
    if -r < t < r:
        value, _ = integrate.quad(kernel.dphi, -r, r, weight="cauchy", wvar=t, limit=400)
    else:
        value, _ = integrate.quad(lambda s: kernel.dphi(s) / (s - t), -r, r, points=points, limit=400)
    return value / np.pi


@pytest.fixture(params=KERNEL_NAMES)
def any_kernel(request):
    return make_kernel(request.param)


class TestKernelShape:
    def test_even_and_normalized(self, any_kernel):
        t = np.linspace(0.0, 3.0, 31)
        np.testing.assert_allclose(any_kernel.phi(t), any_kernel.phi(-t))
        r = any_kernel.support_radius
        total, _ = integrate.quad(any_kernel.phi, -r, r, points=list(any_kernel.breaks), limit=200)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_vanishes_outside_support(self, any_kernel):
        r = any_kernel.support_radius
        assert any_kernel.phi(r + 0.1) == 0.0
        assert any_kernel.dphi(-(r + 2.0)) == 0.0

    @pytest.mark.parametrize("name, variance", [("bspline4", 5 / 12), ("bspline3", 4 / 12)])
    def test_second_moment(self, name, variance):
        moments = make_kernel(name).moments()
        assert moments["integral"] == pytest.approx(1.0)
        assert moments["second_moment"] == pytest.approx(variance, rel=1e-10)

    def test_unknown_kernel(self):
        with pytest.raises(KernelError):
            make_kernel("gaussian")

    def test_instances_are_shared(self):
        assert make_kernel("bspline4") is make_kernel("bspline4")

    def test_module_level_evaluators(self, kernel):
        t = np.linspace(-3.0, 3.0, 13)
        np.testing.assert_array_equal(eval_phi(kernel, t), kernel.phi(t))
        np.testing.assert_array_equal(eval_dphi(kernel, t), kernel.dphi(t))
        np.testing.assert_array_equal(eval_hilbert_dphi(kernel, t), kernel.hilbert_dphi(t))
        assert eval_hilbert_dphi(kernel, 1e3, truncate=True) == 0.0


class TestDtbProfile:
    def test_limits_and_oddness(self, any_kernel):
        t = np.array([0.3, 1.0, 2.2, 10.0])
        np.testing.assert_allclose(any_kernel.dtb(-t), -any_kernel.dtb(t), atol=1e-14)
        assert any_kernel.dtb(0.0) == pytest.approx(0.0, abs=1e-14)
        assert any_kernel.dtb(10.0) == 0.5

    def test_derivative_is_phi(self, kernel):
        t = np.linspace(-2.0, 2.0, 9)
        step = 1e-6
        numeric = (kernel.dtb(t + step) - kernel.dtb(t - step)) / (2 * step)
        np.testing.assert_allclose(numeric, kernel.phi(t), atol=1e-8)


class TestHilbertTransform:
    @pytest.mark.parametrize("t", [0.3, 0.7, 1.1, 1.9, 2.4, 3.0, 6.0, 9.0, 14.0])
    def test_matches_principal_value(self, kernel, t):
        assert kernel.hilbert_dphi(t) == pytest.approx(_pv_hilbert(kernel, t), abs=1e-7)

    def test_even(self, any_kernel):
        t = np.linspace(0.05, 20.0, 40)
        np.testing.assert_allclose(any_kernel.hilbert_dphi(-t), any_kernel.hilbert_dphi(t), atol=1e-14)

    def test_far_field_asymptote(self, kernel):
        t = np.array([50.0, 100.0])
        np.testing.assert_allclose(t**2 * kernel.hilbert_dphi(t), 1.0 / np.pi, rtol=1e-2)

    def test_truncation(self, kernel):
        t = np.array([10.0, 63.9, 64.5])
        values = kernel.hilbert_dphi(t, truncate=True)
        assert values[0] != 0.0 and values[1] != 0.0
        assert values[2] == 0.0

    def test_continuous_across_far_field_switch(self, kernel):
        r = kernel.far_field_radius
        below, above = kernel.hilbert_dphi(np.array([r - 1e-9, r + 1e-9]))
        assert below == pytest.approx(above, rel=1e-7)


class TestAutocorrelation:
    def test_energy_at_zero(self, any_kernel):
        r = any_kernel.support_radius
        energy, _ = integrate.quad(lambda s: any_kernel.dphi(s) ** 2, -r, r, points=list(any_kernel.breaks), limit=200)
        assert any_kernel.autocorr_dphi(0.0) == pytest.approx(energy, rel=1e-8)
        assert any_kernel.moments()["dphi_energy"] == pytest.approx(energy, rel=1e-8)

    @pytest.mark.parametrize("lag", [0.4, 1.3, 2.7])
    def test_phi_autocorrelation(self, kernel, lag):
        r = kernel.support_radius
        points = np.unique(np.concatenate([kernel.breaks, kernel.breaks - lag]))
        points = points[(points > -r) & (points < r)]
        expected, _ = integrate.quad(lambda s: kernel.phi(s + lag) * kernel.phi(s), -r, r, points=points, limit=200)
        assert kernel.autocorr_phi(lag) == pytest.approx(expected, abs=1e-9)

    def test_dphi_autocorrelation_has_zero_mean(self, kernel):
        reach = 2 * kernel.support_radius
        lags = np.unique(np.subtract.outer(kernel.breaks, kernel.breaks))
        total, _ = integrate.quad(kernel.autocorr_dphi, -reach, reach, points=lags[np.abs(lags) < reach], limit=400)
        assert total == pytest.approx(0.0, abs=1e-8)

    def test_even(self, kernel):
        t = np.linspace(0.0, 6.0, 25)
        np.testing.assert_allclose(kernel.autocorr_dphi(-t), kernel.autocorr_dphi(t))
