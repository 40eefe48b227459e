"""Quasihyperbolic metric of the punctured plane, Moebius normalisers and
convex-angle distortion checks."""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .complexgeom import INF, LypRegionSpec, region_contains
from .errors import DomainError, NumericalError, ParameterDomainError


def _nonzero(z, name):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0) or not np.all(np.isfinite(z)):
        raise DomainError(f"{name} must be a finite nonzero point")
    return z


def convex_angle(z1, z2):
    """Angle at the origin between the rays through z1 and z2, in [0, pi]."""
    z1 = _nonzero(z1, "z1")
    z2 = _nonzero(z2, "z2")
    out = _angle(z1, z2)
    return out if out.ndim else float(out)


def _angle(z1, z2):
    # real cross/dot products keep the result exactly symmetric in (z1, z2)
    x1, y1, x2, y2 = z1.real, z1.imag, z2.real, z2.imag
    return np.abs(np.arctan2(x1 * y2 - y1 * x2, x1 * x2 + y1 * y2))


def qh_distance(z1, z2):
    """Quasihyperbolic distance in C* (Martin-Osgood closed form)."""
    z1 = _nonzero(z1, "z1")
    z2 = _nonzero(z2, "z2")
    out = np.hypot(np.log(np.abs(z2)) - np.log(np.abs(z1)), _angle(z1, z2))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Moebius maps with the INF sentinel
# ---------------------------------------------------------------------------


def _mobius(a, b, c, d, z):
    """(a z + b) / (c z + d) on the extended plane (scalar)."""
    if z is INF:
        return INF if c == 0 else a / c
    den = c * z + d
    if den == 0:
        return INF
    return (a * z + b) / den


def _mobius_vec(a, b, c, d, z):
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (a * z + b) / (c * z + d)


def mobius_Y(p, z):
    """Y_p(z) = -p z / (z - p): Y(0) = 0, Y(p) = INF, Y(inf) = -p, Y'(0) = 1."""
    if p == 0:
        raise ParameterDomainError("p must be nonzero")
    if z is INF or np.ndim(z) == 0:
        return _mobius(-p, 0, 1, -p, z)
    return _mobius_vec(-p, 0, 1, -p, z)


def mobius_X(p, z):
    """Inverse of :func:`mobius_Y`: X_p(z) = p z / (z + p)."""
    if p == 0:
        raise ParameterDomainError("p must be nonzero")
    if z is INF or np.ndim(z) == 0:
        return _mobius(p, 0, 1, p, z)
    return _mobius_vec(p, 0, 1, p, z)


def mobius_A0(z):
    """A0(z) = (4i - z) / (4i + z), mapping the upper half-plane onto the disk."""
    if z is INF or np.ndim(z) == 0:
        return _mobius(-1, 4j, 1, 4j, z)
    return _mobius_vec(-1, 4j, 1, 4j, z)


def mobius_A0_inv(w):
    """A0^{-1}(w) = 4i (1 - w) / (1 + w)."""
    if w is INF or np.ndim(w) == 0:
        return _mobius(-4j, 4j, 1, 1, w)
    return _mobius_vec(-4j, 4j, 1, 1, w)


@dataclass(frozen=True)
class MobiusPair:
    """The normalising pair (X_p, Y_p) with p the preimage of infinity under Y_p."""

    p: complex

    def __post_init__(self):
        if self.p == 0 or self.p is INF:
            raise ParameterDomainError("p must be a finite nonzero point")

    def forward(self, z):
        return mobius_X(self.p, z)

    def inverse(self, z):
        return mobius_Y(self.p, z)


# ---------------------------------------------------------------------------
# Angle distortion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AngleDistortionRecord:
    theta: float
    theta_star: float
    bound: float
    alpha: float
    c_used: float
    tightest_c: float

    @property
    def satisfied(self):
        return self.theta_star <= self.bound

    @property
    def margin(self):
        return self.bound - self.theta_star


def check_gehring_osgood(theta, theta_star, c, alpha):
    """theta* <= c max(theta^alpha, theta); also the tightest admissible c."""
    if not (0 <= theta <= math.pi and 0 <= theta_star <= math.pi):
        raise ParameterDomainError("angles must lie in [0, pi]")
    if not (0 < alpha <= 1) or not c > 0:
        raise ParameterDomainError("need c > 0 and alpha in (0, 1]")
    scale = max(theta**alpha, theta)
    if scale == 0.0:
        tight = 0.0 if theta_star == 0.0 else math.inf
    else:
        tight = theta_star / scale
    return AngleDistortionRecord(theta, theta_star, c * scale, alpha, c, tight)


def angle_distortion_sweep(f, thetas, alpha, c=1.0, radius=1.0):
    """Records for pairs (r, r e^{i theta}) pushed through ``f``."""
    recs = []
    z1 = radius + 0j
    w1 = f(z1)
    for th in thetas:
        z2 = radius * np.exp(1j * th)
        ts = convex_angle(w1, f(z2))
        recs.append(check_gehring_osgood(float(th), float(ts), c, alpha))
    return recs


def sweep_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "theta_star", "bound", "tightest_c"])
    for r in records:
        w.writerow([f"{r.theta:.17g}", f"{r.theta_star:.17g}", f"{r.bound:.17g}", f"{r.tightest_c:.17g}"])
    return buf.getvalue()


@dataclass(frozen=True)
class XAngleRecord:
    p: complex
    radius: float
    theta: float
    theta_image: float
    factor: float

    @property
    def bound(self):
        return self.factor * self.theta

    @property
    def margin(self):
        return self.bound - self.theta_image

    @property
    def satisfied(self):
        return self.theta_image <= self.bound


def check_X_angle_bound(p, z1, z2, rtol=1e-9):
    """theta(X z1, X z2) <= (1 + 1/r0) theta(z1, z2), r0 = |p|/2, |z1| = |z2| < r0."""
    r1, r2 = abs(z1), abs(z2)
    r0 = abs(p) / 2.0
    if r1 == 0 or r2 == 0:
        raise DomainError("points must be nonzero")
    if abs(r1 - r2) > rtol * max(r1, r2):
        raise DomainError("points must have equal modulus")
    if not r1 < r0:
        raise DomainError("points must satisfy |z| < |p|/2")
    if z1 == z2:
        th = ths = 0.0
    else:
        th = convex_angle(z1, z2)
        ths = convex_angle(mobius_X(p, z1), mobius_X(p, z2))
    return XAngleRecord(p, r1, th, ths, 1.0 + 1.0 / r0)


def x_angle_factor_sharp(p, radius):
    """Arc-variation factor 1 + R/(|p| - R), valid for every R < |p|."""
    return 1.0 + radius / (abs(p) - radius)


# ---------------------------------------------------------------------------
# Pull-back of Lyapunov regions through Y_p
# ---------------------------------------------------------------------------


def _image_inside(p, spec, target, n):
    pts = np.concatenate((spec.sample(n // 2, seed=7), spec.boundary(n - n // 2)[1:]))
    img = mobius_Y(p, pts)
    ok = region_contains(target, img)
    return ok, pts


def pull_back_region_through_Y(p, target, n=10_000, max_iter=60):
    """Find Lyp(eps1, c1, mu) whose Y_p-image lies inside ``target``.

    Starts from the radius bound eps/(1 + eps/|p|) (which keeps |Y_p| < eps)
    and alternates c1 <- 2 c1 and eps1 <- eps1 / 2, doubling c1 only while
    the region stays admissible.  Checked on ``n`` interior and boundary
    samples (vertex excluded).
    """
    if not target.eps < abs(p) / 2:
        raise ParameterDomainError("target.eps must be smaller than |p|/2")
    mu = target.mu
    eps1 = 0.999 * target.eps / (1.0 + target.eps / abs(p))
    c1 = target.c
    grow_c = True
    bad = None
    for _ in range(max_iter):
        if c1 * eps1**mu < math.pi / 2:
            spec = LypRegionSpec(eps1, c1, mu)
            ok, pts = _image_inside(p, spec, target, n)
            if np.all(ok):
                return spec
        if grow_c and 2 * c1 * eps1**mu < math.pi / 2:
            c1 *= 2.0
        else:
            eps1 /= 2.0
        grow_c = not grow_c
    raise NumericalError(f"no admissible pull-back found; violating sample {bad!r}", residual=bad)
