"""
Tests for disk phantoms, their Radon transforms and edge points.
"""

import numpy as np
import pytest

from sma.errors import PhantomError
from sma.phantom import (
    Disk,
    Phantom,
    admissibility_report,
    boundary_point,
    evaluate,
    radon,
    rational_distance,
)
from sma.sampling import SigmaProfile


class TestPhantom:
    def test_evaluate_inside_outside(self, disk_phantom):
        values = evaluate(disk_phantom, np.array([[0.0, -0.1], [0.3, -0.1], [0.5, 0.5]]))
        np.testing.assert_array_equal(values, [1.0, 1.0, 0.0])

    def test_evaluate_single_point(self, disk_phantom):
        assert evaluate(disk_phantom, (0.0, 0.0)) == 1.0

    def test_overlapping_disks_add(self):
        phantom = Phantom((Disk(0.0, 0.0, 0.3, 1.0), Disk(0.1, 0.0, 0.3, 0.5)), 1.0)
        assert evaluate(phantom, (0.05, 0.0)) == pytest.approx(1.5)

    def test_disk_outside_support_rejected(self):
        with pytest.raises(PhantomError, match="violates"):
            Phantom((Disk(0.8, 0.0, 0.3),), 1.0)

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(PhantomError):
            Disk(0.0, 0.0, 0.0)


class TestRadon:
    def test_centered_disk_chord(self):
        phantom = Phantom((Disk(0.0, 0.0, 0.5, 2.0),), 1.0)
        p = np.array([0.0, 0.3, 0.49, 0.6])
        expected = 2.0 * 2.0 * np.sqrt(np.clip(0.25 - p**2, 0.0, None))
        np.testing.assert_allclose(radon(phantom, 0.7, p), expected)

    def test_parity(self, disk_phantom, rng):
        alpha = rng.uniform(-np.pi, np.pi, 50)
        p = rng.uniform(-0.9, 0.9, 50)
        np.testing.assert_allclose(radon(disk_phantom, alpha + np.pi, -p), radon(disk_phantom, alpha, p), atol=1e-14)

    def test_rotation_shifts_angle(self, disk_phantom, rng):
        angle = 0.4
        rotated = disk_phantom.rotated(angle)
        alpha = rng.uniform(-np.pi, np.pi, 20)
        p = rng.uniform(-0.8, 0.8, 20)
        np.testing.assert_allclose(radon(rotated, alpha + angle, p), radon(disk_phantom, alpha, p), atol=1e-12)


class TestBoundaryPoint:
    def test_rightmost_point(self, disk_phantom):
        edge = boundary_point(disk_phantom, 0, 0.0)
        assert edge.x0 == pytest.approx((0.345, -0.1))
        assert edge.theta0 == pytest.approx((1.0, 0.0))
        assert edge.delta_f == -1.0
        assert edge.theta0_angle == pytest.approx(0.0)

    def test_jump_follows_amplitude(self):
        phantom = Phantom((Disk(0.0, 0.0, 0.4, -0.5),), 1.0)
        assert boundary_point(phantom, 0, 1.0).delta_f == 0.5

    def test_shared_boundary_is_ambiguous(self):
        phantom = Phantom((Disk(0.0, 0.0, 0.2), Disk(0.4, 0.0, 0.2)), 1.0)
        with pytest.raises(PhantomError, match="ambiguous"):
            boundary_point(phantom, 0, 0.0)


class TestAdmissibility:
    def test_default_edge_passes(self, disk_phantom, edge):
        report = admissibility_report(edge.x0, edge.theta0, 2 * np.pi, disk_phantom)
        assert report.status == "pass (advisory)"
        assert report.inside_support and report.curvature_nonzero

    def test_rational_ratio_warns(self, disk_phantom):
        report = admissibility_report((0.5, 0.0), (1.0, 0.0), 2.0, disk_phantom)
        assert report.kappa_norm == pytest.approx(1.0)
        assert report.status == "warn"

    def test_outside_support_fails(self, disk_phantom):
        report = admissibility_report((1.2, 0.0), (1.0, 0.0), 2 * np.pi, disk_phantom)
        assert report.status == "fail: Assumption 4(3)"
        assert not report.inside_support

    def test_vanishing_sigma_fails(self, disk_phantom, edge):
        report = admissibility_report(edge.x0, edge.theta0, 2 * np.pi, disk_phantom, SigmaProfile("constant", 0.0))
        assert report.status == "fail: sigma vanishes for every direction"
        assert report.to_dict()["sigma_nonvanishing"] is False

    def test_rational_distance(self):
        assert rational_distance(0.25) == 0.0
        assert rational_distance(np.pi) == pytest.approx(abs(np.pi - 311 / 99))
