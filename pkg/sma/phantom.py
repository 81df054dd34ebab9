"""
Piecewise-constant disk phantoms with exact Radon transforms and edge metadata.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from sma.errors import PhantomError

logger = logging.getLogger(__name__)

BOUNDARY_TOLERANCE = 1e-12
RATIONAL_DENOMINATOR = 100
RATIONAL_TOLERANCE = 1e-6
SUPPORT_FAILURE = "fail: Assumption 4(3)"


@dataclass(frozen=True)
class Disk:
    """Indicator of a closed disk scaled by ``amplitude``"""

    cx: float
    cy: float
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise PhantomError(f"disk radius must be positive, got {self.radius}")

    @property
    def center(self):
        return np.array([self.cx, self.cy], dtype=float)


@dataclass(frozen=True)
class Phantom:
    """f = sum of disk indicators; every disk lies strictly inside |x| < support"""

    disks: tuple = field(default_factory=tuple)
    support: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "disks", tuple(self.disks))
        for index, disk in enumerate(self.disks):
            if np.hypot(disk.cx, disk.cy) + disk.radius >= self.support:
                raise PhantomError(
                    f"disk {index} violates |center| + radius < P (P = {self.support})"
                )

    def rotated(self, angle):
        """Copy of the phantom rotated about the origin"""
        c, s = np.cos(angle), np.sin(angle)
        disks = tuple(
            Disk(c * d.cx - s * d.cy, s * d.cx + c * d.cy, d.radius, d.amplitude)
            for d in self.disks
        )
        return Phantom(disks, self.support)


@dataclass(frozen=True)
class EdgePoint:
    """Boundary point x0, outward unit normal theta0 and the signed jump delta_f"""

    x0: tuple
    theta0: tuple
    delta_f: float

    @property
    def x0_array(self):
        return np.asarray(self.x0, dtype=float)

    @property
    def theta0_array(self):
        return np.asarray(self.theta0, dtype=float)

    @property
    def theta0_angle(self):
        return float(np.arctan2(self.theta0[1], self.theta0[0]))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Advisory checks on an edge point; never blocks a computation"""

    kappa_norm: float
    kappa_norm_distance: float
    kappa_perp: float
    kappa_perp_distance: float
    curvature_nonzero: bool
    inside_support: bool
    sigma_nonvanishing: bool
    status: str

    def to_dict(self):
        return dict(self.__dict__)


def evaluate(phantom, x):
    """f(x) for one point or an array of points with trailing dimension 2"""
    points = np.asarray(x, dtype=float)
    values = np.zeros(points.shape[:-1])
    for disk in phantom.disks:
        inside = np.hypot(points[..., 0] - disk.cx, points[..., 1] - disk.cy) <= disk.radius
        values = values + disk.amplitude * inside
    return values if values.ndim else float(values)


def radon(phantom, alpha, p):
    """
    Exact line integrals of the phantom along {x : (cos a, sin a) . x = p}.

    ``alpha`` and ``p`` broadcast against each other.
    """
    alpha = np.asarray(alpha, dtype=float)
    p = np.asarray(p, dtype=float)
    cos_a, sin_a = np.cos(alpha), np.sin(alpha)
    values = np.zeros(np.broadcast(alpha, p).shape)
    for disk in phantom.disks:
        d = p - (cos_a * disk.cx + sin_a * disk.cy)
        chord_sq = disk.radius**2 - d**2
        values = values + disk.amplitude * 2.0 * np.sqrt(np.clip(chord_sq, 0.0, None))
    return values if values.ndim else float(values)


def boundary_point(phantom, disk_index, polar_angle):
    """Edge point on disk ``disk_index`` at the given polar angle"""
    disk = phantom.disks[disk_index]
    normal = np.array([np.cos(polar_angle), np.sin(polar_angle)])
    x0 = disk.center + disk.radius * normal

    for index, other in enumerate(phantom.disks):
        if index == disk_index:
            continue
        if abs(np.linalg.norm(x0 - other.center) - other.radius) < BOUNDARY_TOLERANCE:
            raise PhantomError(
                f"boundary point of disk {disk_index} also lies on disk {index}; normal is ambiguous"
            )

    # f just outside minus f just inside along the outward normal
    return EdgePoint(
        x0=(float(x0[0]), float(x0[1])),
        theta0=(float(normal[0]), float(normal[1])),
        delta_f=-float(disk.amplitude),
    )


def rational_distance(value, max_denominator=RATIONAL_DENOMINATOR):
    """Distance from value to the best rational approximation with bounded denominator"""
    best = Fraction(float(value)).limit_denominator(max_denominator)
    return abs(float(value) - float(best))


def admissibility_report(x0, theta0, kappa, phantom, sigma=None):
    """
    Advisory admissibility of an edge point.

    Reports how close kappa*|x0| and kappa*x0.theta0_perp come to simple
    rationals, whether x0 is inside the support and whether sigma is nonzero
    on some set of directions. Disks always have nonzero curvature.
    """
    x0 = np.asarray(x0, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    perp = np.array([-theta0[1], theta0[0]])

    kappa_norm = kappa * float(np.linalg.norm(x0))
    kappa_perp = kappa * float(x0 @ perp)
    norm_distance = rational_distance(kappa_norm)
    perp_distance = rational_distance(kappa_perp)
    inside = bool(np.linalg.norm(x0) < phantom.support)

    if sigma is None:
        nonvanishing = True
    else:
        alphas = np.linspace(-np.pi, np.pi, 256, endpoint=False)
        levels = sigma(alphas, np.cos(alphas) * x0[0] + np.sin(alphas) * x0[1])
        nonvanishing = bool(np.any(np.asarray(levels) > 0))

    if not inside:
        status = SUPPORT_FAILURE
    elif not nonvanishing:
        status = "fail: sigma vanishes for every direction"
    elif min(norm_distance, perp_distance) < RATIONAL_TOLERANCE:
        status = "warn"
    else:
        status = "pass (advisory)"

    report = AdmissibilityReport(
        kappa_norm=kappa_norm,
        kappa_norm_distance=norm_distance,
        kappa_perp=kappa_perp,
        kappa_perp_distance=perp_distance,
        curvature_nonzero=True,
        inside_support=inside,
        sigma_nonvanishing=nonvanishing,
        status=status,
    )
    logger.debug("admissibility of x0=%s: %s", x0, status)
    return report
